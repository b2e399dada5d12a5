"""Stacking fitted layers into a tree over variables.

Each layer's surviving factors become the next layer's input columns
(their most likely states per sample). A factor survives if it explains
a nonzero amount of correlation; a variable survives if the normalized
mutual information with its assigned factor clears the prune threshold
and that factor is itself alive. Stacking stops once at most one live
factor remains, since a single column has no correlation left to
explain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import DataMatrix, DataError
from .core import (
    FORMAT_VERSION,
    CorexConfig,
    CorexLayer,
    SoftLabels,
    fit_best,
    hard_labels,
    layer_from_dict,
    layer_to_dict,
    transform,
)

UNASSIGNED = -1

DEAD_FACTOR_TC = 1e-6
PRUNE_THRESHOLD = 0.05


@dataclass(frozen=True)
class ClusterAssignment:
    """Variable-to-factor assignment for one layer.

    assignment: factor index per variable, UNASSIGNED for pruned ones.
    m_effective: number of factors that ended up with at least one variable.
    """

    assignment: np.ndarray
    m_effective: int


@dataclass(frozen=True)
class Hierarchy:
    """Fitted layers plus the tree structure between them.

    edges[l] maps a surviving variable index at layer l to
    (parent factor index, normalized mutual information).
    """

    layers: list
    edges: list
    pruned_variables: list
    pruned_factors: list
    live_factors: list


def factor_entropies(layer: CorexLayer) -> np.ndarray:
    """H(Y_j) of each factor's learned marginal, in nats."""
    p = np.exp(layer.marginals.log_py)
    return -np.sum(p * layer.marginals.log_py, axis=1)


def _nmi_to_parent(layer: CorexLayer, parent: np.ndarray) -> np.ndarray:
    hy = factor_entropies(layer)
    cols = np.arange(layer.n_vars)
    mi = layer.marginals.mi[parent, cols]
    denom = np.minimum(layer.hx, hy[parent])
    out = np.zeros(layer.n_vars)
    ok = denom > 0
    out[ok] = mi[ok] / denom[ok]
    return out


def clusters(layer: CorexLayer, prune_threshold: float = PRUNE_THRESHOLD) -> ClusterAssignment:
    """Assign each variable to its highest-information factor.

    Ties go to the lowest factor index. Variables failing the prune test
    (NMI below threshold, or constant columns) are left unassigned.
    """
    parent = np.argmax(layer.marginals.mi, axis=0)
    nmi = _nmi_to_parent(layer, parent)
    pruned = (nmi < prune_threshold) | (layer.hx == 0.0)
    assignment = np.where(pruned, UNASSIGNED, parent)
    m_effective = int(np.unique(assignment[assignment != UNASSIGNED]).size)
    return ClusterAssignment(assignment, m_effective)


def prune_variables(layer: CorexLayer, threshold: float = PRUNE_THRESHOLD) -> np.ndarray:
    """Indices of variables whose NMI to their assigned factor is below
    ``threshold`` (strict); constant columns are always included."""
    parent = np.argmax(layer.marginals.mi, axis=0)
    nmi = _nmi_to_parent(layer, parent)
    return np.flatnonzero((nmi < threshold) | (layer.hx == 0.0))


def live_factors(layer: CorexLayer, dead_tc: float = DEAD_FACTOR_TC) -> np.ndarray:
    """Factors that explain a nonzero amount of correlation."""
    return np.flatnonzero(layer.tc_per_factor >= dead_tc)


def rank_factors(layer: CorexLayer, prune_threshold: float = PRUNE_THRESHOLD) -> list:
    """Factors ordered by explained correlation normalized by their group's
    total entropy; (factor index, score) pairs, best first.

    The denominator bounds scores to [0, 1]; a factor with no assigned
    variables scores 0 and sorts last.
    """
    assign = clusters(layer, prune_threshold).assignment
    scores = np.zeros(layer.m)
    for j in range(layer.m):
        denom = layer.hx[assign == j].sum()
        if denom > 0:
            scores[j] = layer.tc_per_factor[j] / denom
    order = sorted(range(layer.m), key=lambda j: (-scores[j], j))
    return [(j, float(scores[j])) for j in order]


def fit_hierarchy(data: DataMatrix, layer_configs, restarts: int = 1,
                  prune_threshold: float = PRUNE_THRESHOLD,
                  dead_tc: float = DEAD_FACTOR_TC) -> Hierarchy:
    """Fit layers bottom-up, feeding surviving factors' hard labels upward.

    Dead factors and pruned variables never propagate. The hierarchy
    truncates early once a layer retains at most one live factor.
    """
    if not layer_configs:
        raise ValueError("need at least one layer config")
    layers, edges, pruned_vars, pruned_facs, live = [], [], [], [], []
    current = data
    for config in layer_configs:
        layer, labels = fit_best(current, config, restarts=restarts)
        alive = live_factors(layer, dead_tc)
        alive_set = set(alive.tolist())
        assign = clusters(layer, prune_threshold).assignment
        nmi = _nmi_to_parent(layer, np.argmax(layer.marginals.mi, axis=0))
        layer_edges = {}
        for i in range(layer.n_vars):
            j = int(assign[i])
            if j != UNASSIGNED and j in alive_set:
                layer_edges[i] = (j, float(nmi[i]))
        layers.append(layer)
        edges.append(layer_edges)
        pruned_vars.append(np.array(sorted(set(range(layer.n_vars)) - set(layer_edges))))
        pruned_facs.append(np.setdiff1d(np.arange(layer.m), alive))
        live.append(alive)
        if alive.size <= 1:
            break
        codes = hard_labels(labels)[:, alive]
        if (codes == codes[0]).all():
            break  # nothing left to explain upstairs
        current = DataMatrix(
            codes,
            np.full(alive.size, config.k, dtype=np.int64),
            column_names=[f"f{len(layers) - 1}_{j}" for j in alive],
        )
    return Hierarchy(layers, edges, pruned_vars, pruned_facs, live)


def transform_hierarchy(h: Hierarchy, data: DataMatrix) -> list:
    """Per-layer soft labels for new data, replaying the fit's propagation."""
    out = []
    current = data
    for li, layer in enumerate(h.layers):
        labels = transform(layer, current)
        out.append(labels)
        if li + 1 == len(h.layers):
            break
        alive = h.live_factors[li]
        codes = hard_labels(labels)[:, alive]
        current = DataMatrix(
            codes,
            np.full(alive.size, layer.config.k, dtype=np.int64),
            column_names=[f"f{li}_{j}" for j in alive],
        )
    return out


# --- tree export -----------------------------------------------------------

def _variable_node(h: Hierarchy, level: int, index: int) -> str:
    """Node id of variable ``index`` at layer ``level`` of the stack."""
    if level == 0:
        layer = h.layers[0]
        if layer.column_names is not None:
            return layer.column_names[index]
        return f"x{index}"
    # variables above level 0 are the previous layer's live factors
    return _factor_node(level - 1, int(h.live_factors[level - 1][index]))


def _factor_node(level: int, j: int) -> str:
    return f"f{level}_{j}"


def tree_to_dict(h: Hierarchy) -> dict:
    """JSON-ready tree: live nodes, parent edges weighted by NMI."""
    layers = []
    for li, layer in enumerate(h.layers):
        factors = [
            {"id": _factor_node(li, int(j)), "index": int(j),
             "tc": float(layer.tc_per_factor[j])}
            for j in h.live_factors[li]
        ]
        edges = [
            {"child": _variable_node(h, li, i), "parent": _factor_node(li, j),
             "nmi": nmi}
            for i, (j, nmi) in sorted(h.edges[li].items())
        ]
        layers.append({
            "level": li,
            "factors": factors,
            "edges": edges,
            "pruned_variables": [_variable_node(h, li, int(i))
                                 for i in h.pruned_variables[li]],
            "pruned_factors": [int(j) for j in h.pruned_factors[li]],
        })
    return {"format_version": FORMAT_VERSION, "layers": layers}


def tree_to_dot(h: Hierarchy, weights: bool = True) -> str:
    """Graphviz text of the live tree; node order is deterministic."""
    doc = tree_to_dict(h)
    lines = ["digraph corex {", "  rankdir=TB;"]
    for level in doc["layers"]:
        for f in level["factors"]:
            lines.append(
                f'  "{f["id"]}" [shape=ellipse, tc="{f["tc"]:.6f}"];'
            )
    leaf_ids = sorted(
        {e["child"] for e in doc["layers"][0]["edges"]} if doc["layers"] else set()
    )
    for node in leaf_ids:
        lines.append(f'  "{node}" [shape=box];')
    for level in doc["layers"]:
        for e in level["edges"]:
            attr = f' [weight="{e["nmi"]:.6f}", label="{e["nmi"]:.3f}"]' if weights else ""
            lines.append(f'  "{e["parent"]}" -> "{e["child"]}"{attr};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_skeleton(doc: dict) -> dict:
    """Structure of an exported tree: node ids and parent links only."""
    return {
        "layers": [
            {
                "factors": sorted(f["id"] for f in level["factors"]),
                "edges": sorted((e["child"], e["parent"]) for e in level["edges"]),
            }
            for level in doc["layers"]
        ]
    }


# --- model (de)serialization -------------------------------------------------

def model_to_dict(h: Hierarchy) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "layers": [layer_to_dict(layer) for layer in h.layers],
        "edges": [
            [[int(i), int(j), float(nmi)] for i, (j, nmi) in sorted(e.items())]
            for e in h.edges
        ],
        "pruned_variables": [[int(i) for i in arr] for arr in h.pruned_variables],
        "pruned_factors": [[int(j) for j in arr] for arr in h.pruned_factors],
        "live_factors": [[int(j) for j in arr] for arr in h.live_factors],
    }


def model_from_dict(doc: dict) -> Hierarchy:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format version: {version!r}")
    return Hierarchy(
        layers=[layer_from_dict(d) for d in doc["layers"]],
        edges=[{i: (j, nmi) for i, j, nmi in e} for e in doc["edges"]],
        pruned_variables=[np.asarray(v, dtype=np.int64) for v in doc["pruned_variables"]],
        pruned_factors=[np.asarray(v, dtype=np.int64) for v in doc["pruned_factors"]],
        live_factors=[np.asarray(v, dtype=np.int64) for v in doc["live_factors"]],
    )


def save_model(h: Hierarchy, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(h), fh, indent=1)
        fh.write("\n")


def load_model(path) -> Hierarchy:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
