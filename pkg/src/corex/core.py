"""Single-layer latent factor optimizer.

Each of ``m`` discrete factors with ``k`` states is a probabilistic
function of the observed columns, chosen to soak up as much of the
data's total correlation as possible. Fitting alternates four steps:

  1. re-estimate the factor marginals p(y_j) and p(y_j | x_i = v) from
     the current soft labels (weighted empirical counts),
  2. compute the mutual information I(X_i : Y_j) implied by those
     marginals,
  3. anneal the column-to-factor weights alpha toward the per-column
     soft-max over factors, sharpening as factors learn more,
  4. recompute the per-sample soft labels in log space.

The mean per-sample log normalizer of a factor's label rule measures the
correlation that factor explains; their sum is the objective tracked for
convergence and is a lower bound on the data's total correlation.

Everything runs in log space with explicit normalization: the label rule
multiplies one ratio per column, which underflows in probability space
for wide tables. Marginal distributions are floored at a small epsilon
and renormalized so no log ever sees an exact zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .data import MISSING, DataMatrix, DataError, column_entropies

FORMAT_VERSION = 1


@dataclass(frozen=True)
class CorexConfig:
    """Knobs for a single layer fit.

    m: number of latent factors.
    k: states per factor (binary by default).
    lam: mixing step for the weight update, in (0, 1].
    tol: convergence threshold on the objective; the fit stops once the
        per-iteration change stays below it for 10 consecutive iterations.
    batch_size: if set, marginals are re-estimated from a random sample
        subset of this size each iteration.
    smoothing: floor applied to estimated marginals before renormalizing.
    dj_scale: constant scaling each factor's learned correlation inside
        the annealing exponent; larger values harden assignments sooner.
    """

    m: int
    k: int = 2
    lam: float = 0.3
    max_iter: int = 1000
    tol: float = 1e-5
    seed: int = 0
    batch_size: int | None = None
    smoothing: float = 1e-10
    dj_scale: float = 500.0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lam must be in (0, 1]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be > 0")
        if self.smoothing <= 0.0:
            raise ValueError("smoothing must be > 0")
        if self.dj_scale < 0.0:
            raise ValueError("dj_scale must be >= 0")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class Marginals:
    """Factor marginals and the mutual information they imply.

    log_py: (m, k) log p(y_j).
    log_cond: (m, n, max_cardinality, k) log p(y_j | x_i = v); slots for
        codes a column never takes hold the factor's prior.
    mi: (m, n) I(X_i : Y_j) in nats.
    """

    log_py: np.ndarray
    log_cond: np.ndarray
    mi: np.ndarray


@dataclass(frozen=True)
class SoftLabels:
    """Per-sample factor posteriors in log space.

    log_pyx: (n_samples, m, k) log p(y_j = y | x).
    log_z: (n_samples, m) log normalizer of each factor's label rule.
    """

    log_pyx: np.ndarray
    log_z: np.ndarray


@dataclass(frozen=True)
class CorexLayer:
    """A fitted layer: weights, marginals, and bookkeeping."""

    config: CorexConfig
    alpha: np.ndarray              # (m, n) column-to-factor weights in (0, 1]
    marginals: Marginals
    hx: np.ndarray                 # (n,) per-column entropies
    tc_per_factor: np.ndarray      # (m,) correlation explained per factor
    tc_total: float
    iterations_run: int
    converged: bool
    objective_history: np.ndarray  # per-iteration tc_total
    cardinalities: np.ndarray      # training schema
    column_names: list[str] | None = None
    codebooks: list[list[str]] | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return self.alpha.shape[0]

    @property
    def n_vars(self) -> int:
        return self.alpha.shape[1]


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    mx = a.max(axis=axis, keepdims=True)
    out = np.log(np.exp(a - mx).sum(axis=axis)) + np.squeeze(mx, axis=axis)
    return out


def _floor_normalize(p: np.ndarray, smoothing: float) -> np.ndarray:
    """Floor a distribution's entries at ``smoothing`` and renormalize."""
    p = np.maximum(p, smoothing)
    return p / p.sum(axis=-1, keepdims=True)


def init_state(data: DataMatrix, config: CorexConfig, rng=None, restart: int = 0):
    """Random starting point: weights ~ U(1/2, 1), labels ~ random simplex.

    The weights deliberately violate the one-parent constraint; annealing
    pulls them toward it. Labels start as independent random
    distributions over the k states per (sample, factor).
    """
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, restart]))
    n = data.n_vars
    alpha = rng.uniform(0.5, 1.0, size=(config.m, n))
    p = rng.random(size=(data.n_samples, config.m, config.k))
    p /= p.sum(axis=2, keepdims=True)
    labels = SoftLabels(np.log(p), np.zeros((data.n_samples, config.m)))
    return alpha, labels


def _estimate(cells: np.ndarray, cardinalities: np.ndarray, log_pyx: np.ndarray,
              smoothing: float) -> Marginals:
    n_samples, m, k = log_pyx.shape
    n = cells.shape[1]
    max_card = int(cardinalities.max())

    p_labels = np.exp(log_pyx)
    py = _floor_normalize(p_labels.mean(axis=0), smoothing)   # (m, k)
    log_py = np.log(py)

    log_cond = np.broadcast_to(
        log_py[:, np.newaxis, np.newaxis, :], (m, n, max_card, k)
    ).copy()
    mi = np.zeros((m, n))
    flat_labels = p_labels.reshape(n_samples, m * k)
    for i in range(n):
        codes = cells[:, i]
        obs = codes != MISSING
        if not obs.any():
            continue
        card = int(cardinalities[i])
        onehot = (codes[obs, np.newaxis] == np.arange(card)).astype(float)
        counts = onehot.sum(axis=0)                            # (card,)
        sums = (onehot.T @ flat_labels[obs]).reshape(card, m, k)
        present = counts > 0
        cond = np.where(
            present[:, np.newaxis, np.newaxis],
            sums / np.maximum(counts, 1.0)[:, np.newaxis, np.newaxis],
            py[np.newaxis, :, :],
        )
        cond = _floor_normalize(cond, smoothing)
        log_cond[:, i, :card, :] = np.log(cond).transpose(1, 0, 2)
        px = counts / counts.sum()
        mi[:, i] = np.einsum(
            "v,vmy->m", px, cond * (np.log(cond) - log_py[np.newaxis, :, :])
        )
    np.maximum(mi, 0.0, out=mi)
    return Marginals(log_py, log_cond, mi)


def estimate_marginals(data: DataMatrix, labels: SoftLabels,
                       smoothing: float = 1e-10) -> Marginals:
    """Weighted empirical marginals of each factor given the soft labels.

    p(y_j) averages the labels over samples; p(y_j | x_i = v) averages
    them over the samples where column i takes code v, skipping missing
    cells. A code with no occurrences falls back to the factor's prior.
    The mutual information grid is computed from these marginals and the
    empirical column distributions.
    """
    if labels.log_pyx.shape[0] != data.n_samples:
        raise ValueError("labels and data disagree on the number of samples")
    return _estimate(data.cells, data.cardinalities, labels.log_pyx, smoothing)


def update_alpha(alpha: np.ndarray, marginals: Marginals, hx: np.ndarray,
                 tc_per_factor: np.ndarray, config: CorexConfig) -> np.ndarray:
    """One annealed step of the column-to-factor weights.

    The target weight for (i, j) is exp(gamma_ij * (I(X_i:Y_j) -
    max_jbar I(X_i:Y_jbar))) with gamma_ij = (1 + dj_scale *
    |tc_per_factor_j|) / H(X_i): a soft-max over factors on the
    normalized-information scale that hardens as factor j learns more.
    Constant columns have no information to allocate, so they sit out the
    update and are pinned at the smallest participating weight.
    """
    active = hx > 0.0
    new = alpha.copy()
    if active.any():
        d = config.dj_scale * np.abs(tc_per_factor)
        gamma = (1.0 + d)[:, np.newaxis] / hx[np.newaxis, active]
        mi = marginals.mi[:, active]
        gap = mi - mi.max(axis=0, keepdims=True)
        a_star = np.exp(gamma * gap)
        new[:, active] = (1.0 - config.lam) * alpha[:, active] + config.lam * a_star
        if not active.all():
            new[:, ~active] = new[:, active].min()
    return new


def compute_labels(data: DataMatrix, alpha: np.ndarray,
                   marginals: Marginals) -> SoftLabels:
    """Log-space label rule applied to every sample.

    log p(y_j | x) accumulates log p(y_j) plus, for each observed column,
    alpha_ij * (log p(y_j | x_i) - log p(y_j)), then normalizes over the
    k states; the log normalizer is returned alongside. Missing cells
    simply contribute nothing, which marginalizes them out of the rule.
    """
    n_samples, n = data.cells.shape
    log_py = marginals.log_py
    m, k = log_py.shape
    s = np.broadcast_to(log_py[:, np.newaxis, :], (m, n_samples, k)).copy()
    for i in range(n):
        codes = data.cells[:, i]
        obs = codes != MISSING
        if not obs.any():
            continue
        ratios = marginals.log_cond[:, i, codes[obs], :] - log_py[:, np.newaxis, :]
        s[:, obs, :] += alpha[:, i][:, np.newaxis, np.newaxis] * ratios
    log_z = _logsumexp(s, axis=2)                 # (m, n_samples)
    log_pyx = s - log_z[:, :, np.newaxis]
    return SoftLabels(
        np.ascontiguousarray(log_pyx.transpose(1, 0, 2)),
        np.ascontiguousarray(log_z.T),
    )


def factor_tc(labels: SoftLabels) -> np.ndarray:
    """Correlation explained per factor: mean per-sample log normalizer."""
    return labels.log_z.mean(axis=0)


def fit_layer(data: DataMatrix, config: CorexConfig, restart: int = 0):
    """Fit one layer; returns (CorexLayer, SoftLabels on the training data).

    Iterates marginals -> mutual information -> weight update -> labels
    until the objective changes by less than ``config.tol`` for 10
    consecutive iterations or ``config.max_iter`` is reached. All
    randomness derives from (config.seed, restart), so reruns are
    bit-identical.
    """
    hx = column_entropies(data)
    if not np.any(hx > 0.0):
        raise DataError("all columns are constant; nothing to explain")
    ss = np.random.SeedSequence([config.seed, restart])
    rng_init, rng_batch = (np.random.default_rng(s) for s in ss.spawn(2))

    alpha, labels = init_state(data, config, rng=rng_init)
    tc_pf = np.zeros(config.m)
    history = []
    quiet = 0
    converged = False
    iterations = 0
    marg = None
    for iterations in range(1, config.max_iter + 1):
        if config.batch_size is not None and config.batch_size < data.n_samples:
            idx = rng_batch.choice(data.n_samples, size=config.batch_size,
                                   replace=False)
            marg = _estimate(data.cells[idx], data.cardinalities,
                             labels.log_pyx[idx], config.smoothing)
        else:
            marg = _estimate(data.cells, data.cardinalities, labels.log_pyx,
                             config.smoothing)
        alpha = update_alpha(alpha, marg, hx, tc_pf, config)
        labels = compute_labels(data, alpha, marg)
        tc_pf = factor_tc(labels)
        tc_total = float(tc_pf.sum())
        if history and abs(tc_total - history[-1]) < config.tol:
            quiet += 1
        else:
            quiet = 0
        history.append(tc_total)
        if quiet >= 10:
            converged = True
            break

    layer = CorexLayer(
        config=config,
        alpha=alpha,
        marginals=marg,
        hx=hx,
        tc_per_factor=tc_pf,
        tc_total=float(tc_pf.sum()),
        iterations_run=iterations,
        converged=converged,
        objective_history=np.asarray(history),
        cardinalities=data.cardinalities.copy(),
        column_names=data.column_names,
        codebooks=data.codebooks,
    )
    return layer, labels


def fit_best(data: DataMatrix, config: CorexConfig, restarts: int = 1):
    """Run ``restarts`` seeded fits and keep the one explaining the most."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    for r in range(restarts):
        layer, labels = fit_layer(data, config, restart=r)
        if best is None or layer.tc_total > best[0].tc_total:
            best = (layer, labels)
    return best


def transform(layer: CorexLayer, data: DataMatrix) -> SoftLabels:
    """Label new data with a fitted layer's frozen parameters.

    The data must use the training schema: a non-missing code at or above
    a column's training cardinality is an error naming that column.
    Missing cells are marginalized out by the label rule, so a fully
    missing sample falls back to the factor priors.
    """
    if data.n_vars != layer.n_vars:
        raise DataError(
            f"model expects {layer.n_vars} columns, data has {data.n_vars}"
        )
    for i in range(data.n_vars):
        col = data.cells[:, i]
        col = col[col != MISSING]
        if col.size and int(col.max()) >= int(layer.cardinalities[i]):
            raise DataError(
                f"column {data._name(i)}: code {int(col.max())} outside the "
                f"training cardinality {int(layer.cardinalities[i])}"
            )
    return compute_labels(data, layer.alpha, layer.marginals)


def hard_labels(labels: SoftLabels) -> np.ndarray:
    """(n_samples, m) most likely state per factor; ties go to the lowest code."""
    return np.argmax(labels.log_pyx, axis=2)


def layer_to_dict(layer: CorexLayer) -> dict:
    """Versioned, JSON-ready dump of a fitted layer (bit-exact round trip)."""
    return {
        "format_version": FORMAT_VERSION,
        "config": asdict(layer.config),
        "alpha": layer.alpha.tolist(),
        "log_py": layer.marginals.log_py.tolist(),
        "log_cond": layer.marginals.log_cond.tolist(),
        "mi": layer.marginals.mi.tolist(),
        "hx": layer.hx.tolist(),
        "tc_per_factor": layer.tc_per_factor.tolist(),
        "tc_total": layer.tc_total,
        "iterations_run": layer.iterations_run,
        "converged": layer.converged,
        "objective_history": layer.objective_history.tolist(),
        "cardinalities": layer.cardinalities.tolist(),
        "column_names": layer.column_names,
        "codebooks": layer.codebooks,
    }


def layer_from_dict(doc: dict) -> CorexLayer:
    """Rebuild a CorexLayer from its JSON document."""
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format version: {version!r}")
    config = CorexConfig(**doc["config"])
    marginals = Marginals(
        log_py=np.asarray(doc["log_py"]),
        log_cond=np.asarray(doc["log_cond"]),
        mi=np.asarray(doc["mi"]),
    )
    return CorexLayer(
        config=config,
        alpha=np.asarray(doc["alpha"]),
        marginals=marginals,
        hx=np.asarray(doc["hx"]),
        tc_per_factor=np.asarray(doc["tc_per_factor"]),
        tc_total=float(doc["tc_total"]),
        iterations_run=int(doc["iterations_run"]),
        converged=bool(doc["converged"]),
        objective_history=np.asarray(doc["objective_history"]),
        cardinalities=np.asarray(doc["cardinalities"]),
        column_names=doc.get("column_names"),
        codebooks=doc.get("codebooks"),
    )
