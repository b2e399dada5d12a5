"""Batch command-line front end.

Subcommands wire the pipeline end to end: ``gen`` writes a benchmark
dataset with its ground-truth sidecar, ``fit`` trains a hierarchy and
emits model/labels/tree/report files, ``transform`` labels new data with
a saved model, ``eval`` scores label files, and ``sweep`` runs the
recovery-vs-dimensionality benchmark grid. Every command writes a
manifest next to its outputs. Exit codes: 0 success, 1 data or model
error, 2 usage error.
"""

import os

# Cap worker threads before numpy initializes its thread pools.
_threads = os.environ.get("COREX_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import csv
import json
import time
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import __version__
from .data import DEFAULT_MISSING_TOKENS, DataError, load_table, parse_delimited, \
    encode_with_codebooks, encode_columns, write_table
from .core import CorexConfig, fit_best, hard_labels
from .hierarchy import (
    PRUNE_THRESHOLD,
    clusters,
    fit_hierarchy,
    load_model,
    rank_factors,
    save_model,
    transform_hierarchy,
    tree_to_dict,
    tree_to_dot,
)
from .synthetic import LatentTreeSpec, generate, truth_to_dict
from .evaluation import adjusted_rand_index, binary_factor_accuracy
from . import plots


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def _write_manifest(out_dir, command, config, seed, inputs, outputs, wall, **extra):
    doc = {
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "wall_time_s": wall,
    }
    doc.update(extra)
    _write_json(Path(out_dir) / "manifest.json", doc)


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


@click.group()
@click.version_option(version=__version__, prog_name="corex")
def main():
    """Latent factor discovery by total correlation explanation."""


# --- gen ---------------------------------------------------------------------

@main.command()
@click.option("--b", type=int, required=True, help="Number of branches.")
@click.option("--c", type=int, required=True, help="Leaves per branch.")
@click.option("--erasure", type=float, default=None,
              help="Leaf erasure probability (default 1 - 2/c).")
@click.option("--flip", type=float, default=1 / 3, show_default=True,
              help="Root-to-branch flip probability.")
@click.option("--samples", type=int, default=None,
              help="Sample count (default max(200, 2*b*c)).")
@click.option("--noise-vars", type=int, default=0, show_default=True,
              help="Extra independent binary columns.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
def gen(b, c, erasure, flip, samples, noise_vars, seed, out_dir):
    """Generate a latent-tree benchmark dataset plus ground-truth sidecar."""
    try:
        spec = LatentTreeSpec(b=b, c=c, erasure=erasure, root_flip=flip,
                              n_samples=samples, noise_vars=noise_vars, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    t0 = time.perf_counter()
    data, truth = generate(spec)
    out = _out_dir(out_dir)
    data_path = out / "data.csv"
    truth_path = out / "truth.json"
    write_table(data, data_path)
    _write_json(truth_path, truth_to_dict(truth, spec))
    _write_manifest(out, "gen", truth_to_dict(truth, spec)["spec"], seed,
                    [], [data_path, truth_path], time.perf_counter() - t0)
    click.echo(f"wrote {data_path} ({data.n_samples}x{data.n_vars}) and {truth_path}")


# --- fit ---------------------------------------------------------------------

def _fit_configs(m, layers, k, lam, tol, max_iter, seed, batch_size):
    if layers and m is not None:
        raise click.UsageError("give either --m or --layers, not both")
    if layers:
        try:
            sizes = [int(s) for s in layers.split(",") if s.strip()]
        except ValueError:
            raise click.UsageError(f"bad --layers list: {layers!r}")
        if not sizes:
            raise click.UsageError("--layers is empty")
    elif m is not None:
        sizes = [m]
    else:
        raise click.UsageError("one of --m or --layers is required")
    return [
        CorexConfig(m=size, k=k, lam=lam, tol=tol, max_iter=max_iter,
                    seed=seed + li, batch_size=batch_size)
        for li, size in enumerate(sizes)
    ]


def _write_hard_labels(path, hierarchy, per_layer_labels):
    header, columns = [], []
    for li, labels in enumerate(per_layer_labels):
        hard = hard_labels(labels)
        for j in range(hard.shape[1]):
            header.append(f"f{li}_{j}")
            columns.append(hard[:, j])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(zip(*[c.tolist() for c in columns]))


def _write_soft_labels(path, per_layer_labels, k_per_layer):
    """Hard label columns first, then per-state probabilities (6 decimals)."""
    header, columns = [], []
    for li, labels in enumerate(per_layer_labels):
        hard = hard_labels(labels)
        for j in range(hard.shape[1]):
            header.append(f"f{li}_{j}")
            columns.append([str(v) for v in hard[:, j]])
    for li, labels in enumerate(per_layer_labels):
        probs = np.exp(labels.log_pyx)
        for j in range(probs.shape[1]):
            for y in range(k_per_layer[li]):
                header.append(f"f{li}_{j}_p{y}")
                columns.append([f"{v:.6f}" for v in probs[:, j, y]])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(zip(*columns))


def _write_clusters(path, hierarchy):
    layer = hierarchy.layers[0]
    names = layer.column_names or [f"x{i}" for i in range(layer.n_vars)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "factor", "nmi"])
        for i in range(layer.n_vars):
            if i in hierarchy.edges[0]:
                j, nmi = hierarchy.edges[0][i]
                writer.writerow([names[i], j, f"{nmi:.6f}"])
            else:
                writer.writerow([names[i], "", ""])


def _write_history(path, hierarchy):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "iteration", "tc_total"])
        for li, layer in enumerate(hierarchy.layers):
            for it, tc in enumerate(layer.objective_history, start=1):
                writer.writerow([li, it, repr(float(tc))])


@main.command()
@click.argument("data_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--m", type=int, default=None, help="Factor count (single layer).")
@click.option("--layers", type=str, default=None,
              help="Comma list of factor counts per layer, e.g. 8,3,1.")
@click.option("--k", type=int, default=2, show_default=True,
              help="States per factor.")
@click.option("--lambda", "lam", type=float, default=0.3, show_default=True,
              help="Weight-update step size.")
@click.option("--tol", type=float, default=1e-5, show_default=True)
@click.option("--max-iter", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=1, show_default=True)
@click.option("--batch-size", type=int, default=None,
              help="Estimate marginals on a random subset of this size.")
@click.option("--prune-threshold", type=float, default=PRUNE_THRESHOLD,
              show_default=True, help="NMI below which a variable is pruned.")
@click.option("--delimiter", type=str, default=",", show_default=True)
@click.option("--no-header", is_flag=True, help="Data file has no header row.")
@click.option("--missing-tokens", type=str, default=",".join(DEFAULT_MISSING_TOKENS),
              help="Comma list of tokens read as missing cells.")
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
def fit(data_path, m, layers, k, lam, tol, max_iter, seed, restarts, batch_size,
        prune_threshold, delimiter, no_header, missing_tokens, out_dir):
    """Fit a factor hierarchy to a delimited categorical data file."""
    configs = _fit_configs(m, layers, k, lam, tol, max_iter, seed, batch_size)
    t0 = time.perf_counter()
    try:
        data = load_table(data_path, delimiter=delimiter,
                          missing_tokens=tuple(missing_tokens.split(",")),
                          has_header=not no_header)
        hierarchy = fit_hierarchy(data, configs, restarts=restarts,
                                  prune_threshold=prune_threshold)
        per_layer_labels = transform_hierarchy(hierarchy, data)
    except (DataError, ValueError) as exc:
        raise click.ClickException(str(exc))
    wall = time.perf_counter() - t0

    out = _out_dir(out_dir)
    paths = {name: out / name for name in (
        "model.json", "labels.csv", "clusters.csv", "objective_history.csv",
        "objective_history.png", "tree.dot", "tree.json", "ranking.json",
    )}
    save_model(hierarchy, paths["model.json"])
    _write_hard_labels(paths["labels.csv"], hierarchy, per_layer_labels)
    _write_clusters(paths["clusters.csv"], hierarchy)
    _write_history(paths["objective_history.csv"], hierarchy)
    plots.save_objective_figure(
        [layer.objective_history for layer in hierarchy.layers],
        paths["objective_history.png"],
    )
    paths["tree.dot"].write_text(tree_to_dot(hierarchy))
    _write_json(paths["tree.json"], tree_to_dict(hierarchy))
    _write_json(paths["ranking.json"], {
        "layers": [
            [{"factor": j, "score": score} for j, score in rank_factors(layer)]
            for layer in hierarchy.layers
        ],
    })
    _write_manifest(
        out, "fit", [asdict(c) for c in configs], seed,
        [data_path], sorted(str(p) for p in paths.values()), wall,
        restarts=restarts,
        prune_threshold=prune_threshold,
        converged=[bool(layer.converged) for layer in hierarchy.layers],
        iterations=[int(layer.iterations_run) for layer in hierarchy.layers],
        tc_total=[float(layer.tc_total) for layer in hierarchy.layers],
    )
    top = hierarchy.layers[0]
    click.echo(
        f"fit {len(hierarchy.layers)} layer(s); layer 0: tc_total="
        f"{top.tc_total:.4f} nats, iterations={top.iterations_run}, "
        f"converged={top.converged}"
    )


# --- transform ---------------------------------------------------------------

@main.command()
@click.argument("model_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("data_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--delimiter", type=str, default=",", show_default=True)
@click.option("--no-header", is_flag=True, help="Data file has no header row.")
@click.option("--missing-tokens", type=str, default=",".join(DEFAULT_MISSING_TOKENS),
              help="Comma list of tokens read as missing cells.")
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
def transform(model_path, data_path, delimiter, no_header, missing_tokens, out_dir):
    """Label a data file with a fitted model (soft probabilities + hard codes)."""
    t0 = time.perf_counter()
    tokens = tuple(missing_tokens.split(","))
    try:
        hierarchy = load_model(model_path)
        layer0 = hierarchy.layers[0]
        names, rows = parse_delimited(data_path, delimiter=delimiter,
                                      has_header=not no_header)
        if layer0.codebooks is not None:
            data = encode_with_codebooks(rows, layer0.codebooks,
                                         missing_tokens=tokens,
                                         column_names=names or layer0.column_names)
        else:
            data = encode_columns(rows, missing_tokens=tokens, column_names=names)
        per_layer_labels = transform_hierarchy(hierarchy, data)
    except (DataError, ValueError) as exc:
        raise click.ClickException(str(exc))
    wall = time.perf_counter() - t0

    out = _out_dir(out_dir)
    labels_path = out / "labels.csv"
    _write_soft_labels(labels_path, per_layer_labels,
                       [layer.config.k for layer in hierarchy.layers])
    _write_manifest(out, "transform", None, None, [model_path, data_path],
                    [labels_path], wall)
    click.echo(f"wrote {labels_path} ({data.n_samples} samples)")


# --- eval --------------------------------------------------------------------

def _numeric_row(row) -> bool:
    for tok in row:
        tok = tok.strip()
        if tok == "":
            continue
        try:
            int(tok)
        except ValueError:
            return False
    return True


def _read_label_file(path, column=None, field=None):
    """Read one labeling from a CSV column or a ground-truth sidecar field.

    Returns (labels, sidecar_spec_or_None). Empty cells and JSON nulls
    become None (excluded from scoring).
    """
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        field = field or "cluster_of"
        if field == "cluster_of":
            vals = doc["cluster_of"]
        elif field == "z":
            vals = doc["z"]
        elif field.startswith("y:"):
            vals = [row[int(field[2:])] for row in doc["y"]]
        else:
            raise DataError(f"unknown sidecar field {field!r}")
        return list(vals), doc.get("spec")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = None
    if not _numeric_row(rows[0]):
        header, rows = rows[0], rows[1:]
    if column is None:
        if rows and len(rows[0]) != 1:
            raise DataError(
                f"{path} has {len(rows[0])} columns; select one with --pred-column"
            )
        idx = 0
    elif header is not None and column in header:
        idx = header.index(column)
    else:
        try:
            idx = int(column)
        except ValueError:
            raise DataError(f"{path}: no column named {column!r}")
    vals = []
    for row in rows:
        tok = row[idx].strip()
        vals.append(None if tok == "" else int(tok))
    return vals, None


@main.command("eval")
@click.argument("pred_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("truth_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--metric", type=click.Choice(["ari", "acc"]), required=True)
@click.option("--pred-column", type=str, default=None,
              help="Column of the prediction file to score.")
@click.option("--truth-column", type=str, default=None,
              help="Column of a CSV truth file to score against.")
@click.option("--truth-field", type=str, default=None,
              help="Sidecar field: cluster_of, z, or y:<j>.")
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
def eval_cmd(pred_path, truth_path, metric, pred_column, truth_column,
             truth_field, out_dir):
    """Score a prediction file against ground truth (ARI or binary accuracy)."""
    t0 = time.perf_counter()
    try:
        pred, _ = _read_label_file(pred_path, column=pred_column)
        default_field = "cluster_of" if metric == "ari" else "z"
        truth, spec = _read_label_file(truth_path, column=truth_column,
                                       field=truth_field or default_field)
        if len(pred) != len(truth):
            raise DataError(
                f"length mismatch: {len(pred)} predictions vs {len(truth)} truths"
            )
        if metric == "ari":
            value = adjusted_rand_index(pred, truth)
            excluded = sum(1 for p, t in zip(pred, truth) if p is None or t is None)
        else:
            value = binary_factor_accuracy(pred, truth)
            excluded = 0
    except (DataError, ValueError) as exc:
        raise click.ClickException(str(exc))
    record = {
        "metric": metric,
        "value": value,
        "n_items": len(pred),
        "n_excluded": excluded,
        "pred": str(pred_path),
        "truth": str(truth_path),
        "spec": spec,
        "seed": (spec or {}).get("seed"),
    }
    out = _out_dir(out_dir)
    _write_json(out / "metric.json", record)
    _write_manifest(out, "eval", {"metric": metric}, record["seed"],
                    [pred_path, truth_path], [out / "metric.json"],
                    time.perf_counter() - t0)
    click.echo(json.dumps(record))


# --- sweep -------------------------------------------------------------------

@main.command()
@click.option("--b", type=int, default=8, show_default=True)
@click.option("--c-list", type=str, required=True,
              help="Comma list of leaves-per-branch values, e.g. 4,8,16.")
@click.option("--seeds", type=int, default=1, show_default=True,
              help="Number of seeds (0..seeds-1) per grid point.")
@click.option("--m", type=int, default=None, help="Factor count (default: b).")
@click.option("--k", type=int, default=2, show_default=True)
@click.option("--lambda", "lam", type=float, default=0.3, show_default=True)
@click.option("--tol", type=float, default=1e-5, show_default=True)
@click.option("--max-iter", type=int, default=1000, show_default=True)
@click.option("--restarts", type=int, default=5, show_default=True)
@click.option("--erasure", type=float, default=None,
              help="Override the 1 - 2/c default.")
@click.option("--flip", type=float, default=1 / 3)
@click.option("--samples", type=int, default=None)
@click.option("--noise-vars", type=int, default=0, show_default=True)
@click.option("--prune-threshold", type=float, default=PRUNE_THRESHOLD,
              show_default=True)
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
def sweep(b, c_list, seeds, m, k, lam, tol, max_iter, restarts, erasure, flip,
          samples, noise_vars, prune_threshold, out_dir):
    """Benchmark cluster recovery across problem sizes and seeds."""
    try:
        cs = [int(s) for s in c_list.split(",") if s.strip()]
    except ValueError:
        raise click.UsageError(f"bad --c-list: {c_list!r}")
    if not cs or seeds < 1:
        raise click.UsageError("need a nonempty --c-list and --seeds >= 1")

    t0 = time.perf_counter()
    rows, row_manifests = [], []
    for c in cs:
        for seed in range(seeds):
            spec = LatentTreeSpec(b=b, c=c, erasure=erasure, root_flip=flip,
                                  n_samples=samples, noise_vars=noise_vars,
                                  seed=seed)
            config = CorexConfig(m=m if m is not None else b, k=k, lam=lam,
                                 tol=tol, max_iter=max_iter, seed=seed)
            data, truth = generate(spec)
            run_t0 = time.perf_counter()
            layer, _ = fit_best(data, config, restarts=restarts)
            wall = time.perf_counter() - run_t0
            assign = clusters(layer, prune_threshold).assignment
            leaves = [i for i, g in enumerate(truth.cluster_of) if g is not None]
            pred = [None if assign[i] < 0 else int(assign[i]) for i in leaves]
            ref = [truth.cluster_of[i] for i in leaves]
            ari = adjusted_rand_index(pred, ref)
            rows.append({
                "b": b, "c": c, "n": data.n_vars, "seed": seed,
                "n_samples": data.n_samples, "ari": ari,
                "tc_total": layer.tc_total,
                "iterations": layer.iterations_run,
                "converged": layer.converged,
                "wall_time_s": wall,
            })
            row_manifests.append({
                "spec": truth_to_dict(truth, spec)["spec"],
                "config": asdict(config),
                "restarts": restarts,
                "ari": ari,
                "wall_time_s": wall,
            })
            click.echo(
                f"c={c} seed={seed}: n={data.n_vars} ari={ari:.3f} "
                f"tc={layer.tc_total:.3f} iters={layer.iterations_run}"
            )

    out = _out_dir(out_dir)
    csv_path = out / "sweep.csv"
    fig_path = out / "sweep.png"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    plots.save_sweep_figure(rows, fig_path)
    _write_manifest(out, "sweep", {"c_list": cs, "seeds": seeds,
                                   "restarts": restarts}, None,
                    [], [csv_path, fig_path], time.perf_counter() - t0,
                    rows=row_manifests)
    click.echo(f"wrote {csv_path} and {fig_path} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
