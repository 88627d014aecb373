"""Run artifact emission: CSV/JSON files with a hash manifest.

Everything is rendered to bytes in memory first, then written; the
manifest lists every emitted file with its sha256, so two runs match iff
their manifests match. Floats print with 17 significant digits (full
round-trip precision); JSON files carry no timestamps or runtimes, which
keeps reruns byte-identical."""

import hashlib
import io
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np
import pandas as pd

from .config import to_ini

FLOAT_FORMAT = "%.17g"
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


class OutputError(OSError):
    pass


def _probe_writable(outdir):
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        probe = outdir / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as e:
        raise OutputError(f"output directory {outdir} is not writable: {e}") from e
    return outdir


def _jsonable(obj):
    """Recursively make an object JSON-clean; non-finite floats become
    strings so the files stay strictly valid JSON."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if math.isnan(f):
            return "NaN"
        if math.isinf(f):
            return "Infinity" if f > 0 else "-Infinity"
        return f
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, frozenset):
        return sorted(obj)
    return obj


def _json_bytes(obj):
    return (json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n").encode()


def _csv_bytes(df):
    buf = io.StringIO()
    df.to_csv(buf, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buf.getvalue().encode()


def weighted_quantiles_matrix(values, weights, qs=QUANTILES):
    """Per-column weighted quantiles of a (N, T) matrix -> (len(qs), T).

    Uses the inverse weighted CDF: the smallest value whose cumulative
    weight reaches q."""
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    w = w / w.sum()
    idx = np.argsort(v, axis=0, kind="stable")
    sv = np.take_along_axis(v, idx, axis=0)
    sw = w[idx]
    cum = np.cumsum(sw, axis=0)
    cum[-1, :] = 1.0
    out = np.empty((len(qs), v.shape[1]))
    for i, q in enumerate(qs):
        pick = np.argmax(cum >= q, axis=0)
        out[i] = sv[pick, np.arange(v.shape[1])]
    return out


def trajectories_frame(store):
    """Long-format dump: one row per (particle, simulated week, variable).

    Week 0 is the initial condition, not a simulated week, so rows run
    from week 1."""
    n, T = store.n_particles, store.weeks
    nvars = len(store.variables)
    return pd.DataFrame({
        "particle_id": np.tile(np.repeat(np.arange(n), T), nvars),
        "week": np.tile(np.arange(1, T + 1), n * nvars),
        "variable": np.repeat(np.array(store.variables, dtype=object), n * T),
        "value": np.concatenate(
            [store.data[v][:, 1:].ravel() for v in store.variables]),
    })


def quantiles_frame(store):
    rows = []
    weeks = np.arange(store.weeks + 1)
    for var in store.variables:
        qm = weighted_quantiles_matrix(store.data[var], store.weights)
        frame = pd.DataFrame({"week": weeks, "variable": var})
        for qi, q in enumerate(QUANTILES):
            frame[f"q{int(round(q * 100)):02d}"] = qm[qi]
        rows.append(frame)
    return pd.concat(rows, ignore_index=True)


def _wmean_sd(x, w):
    m = float(w @ x)
    var = float(w @ ((x - m) ** 2))
    return m, math.sqrt(max(var, 0.0))


def summary_payload(store):
    w = store.weights
    terminal = {}
    for var in store.variables:
        x = store.terminal(var)
        m, sd = _wmean_sd(x, w)
        qs = weighted_quantiles_matrix(x[:, None], w, qs=(0.05, 0.5, 0.95))[:, 0]
        terminal[var] = {"mean": m, "sd": sd,
                         "q05": float(qs[0]), "q50": float(qs[1]),
                         "q95": float(qs[2])}
    cfg = store.config
    return {
        "label": store.label,
        "seed": store.seed,
        "particles": store.n_particles,
        "weeks": store.weeks,
        "narratives": cfg.narratives,
        "calibration": cfg.calibration,
        "mode": cfg.mode,
        "factors": list(store.factor_mask),
        "ess": 1.0 / float(np.sum(w * w)),
        "terminal": terminal,
        "config_ini": to_ini(cfg),
    }


def archetype_frames(aset):
    """(summary_df, trajectories_df) for an ArchetypeSet."""
    summary = aset.to_frame()
    summary["rho_terminal"] = aset.rho_terminal
    rows = []
    for var, mat in sorted(aset.trajectories.items()):
        for c in range(aset.k):
            frame = pd.DataFrame({
                "archetype": c,
                "week": np.arange(mat.shape[1]),
                "variable": var,
                "value": mat[c],
            })
            rows.append(frame)
    return summary, pd.concat(rows, ignore_index=True)


def assignments_frame(store, aset):
    return pd.DataFrame({
        "particle": np.arange(store.n_particles),
        "archetype": aset.assignments,
        "weight": store.weights,
    })


def salience_frame(store, lens_values, new_weights):
    return pd.DataFrame({
        "particle": np.arange(store.n_particles),
        "base_weight": store.weights,
        "lens_value": lens_values,
        "salience_weight": new_weights,
    })


def terminals_frame(store):
    """One row per particle: weight plus every variable's terminal value."""
    cols = {"particle": np.arange(store.n_particles), "weight": store.weights}
    for var in store.variables:
        cols[var] = store.terminal(var)
    return pd.DataFrame(cols)


def write_with_manifest(outdir, files, seed, label):
    """Write rendered byte files plus a manifest listing their hashes."""
    outdir = _probe_writable(outdir)
    manifest = {
        "seed": seed,
        "label": label,
        "files": [
            {"name": name,
             "sha256": hashlib.sha256(data).hexdigest(),
             "bytes": len(data)}
            for name, data in sorted(files.items())
        ],
    }
    files = dict(files)
    files["manifest.json"] = _json_bytes(manifest)
    for name, data in files.items():
        (outdir / name).write_bytes(data)
    return manifest


def emit_outputs(store, outdir, *, include_trajectories=True,
                 archetype_set=None, correlations=None, bias=None,
                 decomposition=None, salience=None, topology=None):
    """Write the run's artifact set and return the manifest dict.

    Fails fast (before rendering anything) if outdir cannot be written.
    Optional artifacts are emitted only when their analysis object is
    passed. salience is a dict with keys lens, lens_values, weights, ess.
    """
    outdir = _probe_writable(outdir)
    files = {}

    files["summary.json"] = _json_bytes(summary_payload(store))
    files["quantiles.csv"] = _csv_bytes(quantiles_frame(store))
    files["terminals.csv"] = _csv_bytes(terminals_frame(store))
    if include_trajectories:
        files["trajectories.csv"] = _csv_bytes(trajectories_frame(store))
    if archetype_set is not None:
        summary_df, traj_df = archetype_frames(archetype_set)
        files["archetype_summary.csv"] = _csv_bytes(summary_df)
        files["archetypes.csv"] = _csv_bytes(traj_df)
        files["assignments.csv"] = _csv_bytes(assignments_frame(store, archetype_set))
    if correlations is not None:
        files["correlations.csv"] = _csv_bytes(correlations)
    if bias is not None:
        files["bias_report.json"] = _json_bytes(bias.to_dict())
    if decomposition is not None:
        files["decomposition.json"] = _json_bytes(decomposition)
    if salience is not None:
        files["salience.csv"] = _csv_bytes(
            salience_frame(store, salience["lens_values"], salience["weights"]))
        files["salience_report.json"] = _json_bytes({
            "lens": salience["lens"],
            "ess_before": 1.0 / float(np.sum(store.weights ** 2)),
            "ess_after": salience["ess"],
            "terminal_means": salience.get("terminal_means", {}),
        })
    if topology is not None:
        files["topology.json"] = _json_bytes(topology)

    return write_with_manifest(outdir, files, store.seed, store.label)


# --- lightweight schema validation -----------------------------------------

def load_schema(name):
    ref = resources.files("cosim.schemas").joinpath(name)
    return json.loads(ref.read_text())


def _check(instance, schema, path="$"):
    errors = []
    t = schema.get("type")
    if t is not None:
        types = t if isinstance(t, list) else [t]
        checks = {
            "object": lambda x: isinstance(x, dict),
            "array": lambda x: isinstance(x, list),
            "string": lambda x: isinstance(x, str),
            "number": lambda x: isinstance(x, (int, float)) and not isinstance(x, bool),
            "integer": lambda x: isinstance(x, int) and not isinstance(x, bool),
            "boolean": lambda x: isinstance(x, bool),
            "null": lambda x: x is None,
        }
        if not any(checks[tt](instance) for tt in types):
            errors.append(f"{path}: expected {t}, got {type(instance).__name__}")
            return errors
    for key in schema.get("required", []):
        if key not in instance:
            errors.append(f"{path}: missing required key {key!r}")
    for key, sub in schema.get("properties", {}).items():
        if isinstance(instance, dict) and key in instance:
            errors.extend(_check(instance[key], sub, f"{path}.{key}"))
    if "items" in schema and isinstance(instance, list):
        for i, item in enumerate(instance):
            errors.extend(_check(item, schema["items"], f"{path}[{i}]"))
    return errors


def validate_output_file(path):
    """Validate one emitted file against its bundled schema; returns a list
    of problems (empty = valid). CSV schemas check the header columns."""
    path = Path(path)
    schema = load_schema(path.name.replace(".csv", "").replace(".json", "")
                         + ".schema.json")
    if schema.get("csv"):
        header = path.read_text().splitlines()[0].split(",")
        missing = [c for c in schema["required_columns"] if c not in header]
        problems = [f"missing columns {missing}"] if missing else []
        if not schema.get("allow_extra", False):
            extra = [c for c in header if c not in schema["required_columns"]]
            if extra:
                problems.append(f"unexpected columns {extra}")
        return problems
    return _check(json.loads(path.read_text()), schema)
