"""Latent-tree benchmark generator.

Samples a two-level tree: a fair root bit, ``b`` intermediate bits that
are noisy copies of the root, and ``c`` leaf columns per branch obtained
by passing the branch bit through an erasure channel. Leaves are stored
as 3-valued categoricals with the erasure symbol coded between the two
bit values, so the code order is (0, erased, 1); erasure is an outcome
in its own right, never a missing cell. Optional distractor columns are
fair bits independent of everything.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataMatrix

ERASURE = 2  # channel-output symbol for an erased bit


@dataclass(frozen=True)
class LatentTreeSpec:
    """Generator parameters; fields left None resolve to the standard choices.

    erasure defaults to 1 - 2/c, spreading each branch bit thinly across
    its leaves (two expected unerased leaves per branch per sample).
    n_samples defaults to max(200, 2 * b * c).
    """

    b: int
    c: int
    erasure: float | None = None
    root_flip: float = 1 / 3
    n_samples: int | None = None
    noise_vars: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.b < 1 or self.c < 1:
            raise ValueError("b and c must be >= 1")
        if self.erasure is None:
            object.__setattr__(self, "erasure", 1.0 - 2.0 / self.c)
        if not 0.0 <= self.erasure <= 1.0:
            raise ValueError("erasure must be in [0, 1]")
        if not 0.0 <= self.root_flip <= 0.5:
            raise ValueError("root_flip must be in [0, 0.5]")
        if self.n_samples is None:
            object.__setattr__(self, "n_samples", max(200, 2 * self.b * self.c))
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.noise_vars < 0:
            raise ValueError("noise_vars must be >= 0")

    @property
    def n_leaves(self) -> int:
        return self.b * self.c


@dataclass(frozen=True)
class GroundTruth:
    """Latent values behind a generated dataset.

    z: (n_samples,) root bit.
    y: (n_samples, b) branch bits.
    cluster_of: true branch index per column, None for noise columns.
    """

    z: np.ndarray
    y: np.ndarray
    cluster_of: list


def bsc(bit, flip: float, rng) -> np.ndarray:
    """Binary symmetric channel: flip each input bit with probability ``flip``."""
    if not 0.0 <= flip <= 1.0:
        raise ValueError("flip must be a probability")
    bit = np.asarray(bit, dtype=np.int64)
    return bit ^ (rng.random(size=bit.shape) < flip)


def bec(bit, delta: float, rng) -> np.ndarray:
    """Binary erasure channel: pass each bit through, or emit ERASURE
    with probability ``delta``."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must be a probability")
    bit = np.asarray(bit, dtype=np.int64)
    return np.where(rng.random(size=bit.shape) < delta, ERASURE, bit)


def generate(spec: LatentTreeSpec):
    """Sample a dataset and its ground truth from the tree model.

    Leaf columns come first, grouped by branch (branch j owns columns
    j*c .. (j+1)*c - 1), followed by any noise columns. All randomness
    derives from spec.seed.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    z = rng.integers(0, 2, size=n)
    y = bsc(np.repeat(z[:, np.newaxis], spec.b, axis=1), spec.root_flip, rng)
    raw = bec(np.repeat(y, spec.c, axis=1), spec.erasure, rng)
    # recode channel outputs (0, 1, ERASURE) to column codes (0, 2, 1)
    leaves = np.where(raw == ERASURE, 1, raw * 2)
    columns = [leaves]
    if spec.noise_vars:
        columns.append(rng.integers(0, 2, size=(n, spec.noise_vars)))
    cells = np.hstack(columns)
    cards = np.concatenate([
        np.full(spec.n_leaves, 3, dtype=np.int64),
        np.full(spec.noise_vars, 2, dtype=np.int64),
    ])
    names = [f"x{i}" for i in range(cells.shape[1])]
    data = DataMatrix(cells, cards, column_names=names)
    cluster_of = [i // spec.c for i in range(spec.n_leaves)]
    cluster_of += [None] * spec.noise_vars
    return data, GroundTruth(z=z, y=y, cluster_of=cluster_of)


def truth_to_dict(truth: GroundTruth, spec: LatentTreeSpec) -> dict:
    """JSON-ready sidecar with the latent values and generator settings."""
    return {
        "spec": {
            "b": spec.b,
            "c": spec.c,
            "erasure": spec.erasure,
            "root_flip": spec.root_flip,
            "n_samples": spec.n_samples,
            "noise_vars": spec.noise_vars,
            "seed": spec.seed,
        },
        "z": truth.z.tolist(),
        "y": truth.y.tolist(),
        "cluster_of": truth.cluster_of,
    }
