"""Artifact emission: run manifest, result JSON, delimited tables, figures.

Everything except manifest.json is a pure function of the inputs, so two
runs with the same config and seed produce byte-identical files;
timestamps live only in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import time
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, ParseError
from .pcdm import CovarianceMatrix
from .search import RunResult


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_path(path) -> str:
    path = Path(path)
    if path.is_dir():
        h = hashlib.sha256()
        for child in sorted(path.rglob("*")):
            if child.is_file():
                h.update(child.name.encode())
                h.update(child.read_bytes())
        return h.hexdigest()
    return sha256_bytes(path.read_bytes())


def write_manifest(outdir: Path, config, seed: int) -> None:
    inputs = {}
    if config.source_path:
        inputs["config"] = sha256_path(config.source_path)
    if config.network_path:
        inputs["network"] = sha256_path(config.network_path)
    if config.pattern_bundle_path:
        inputs["pattern_bundle"] = sha256_path(config.pattern_bundle_path)
    manifest = {
        "tool": "pixelfas",
        "version": __version__,
        "master_seed": seed,
        "created_unix": time.time(),
        "input_digests": inputs,
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_covariance_csv(path, matrices, ordering=None) -> None:
    """Per-frequency covariance as freq_hz,row,col,value rows.

    ``ordering`` (1-based state indices) selects a submatrix first; rows
    and cols in the file are then FAS-port indices starting at 1.
    """
    lines = ["freq_hz,row,col,value"]
    for cov in matrices:
        rho = cov.rho
        if ordering is not None:
            idx = np.asarray(ordering) - 1
            rho = rho[np.ix_(idx, idx)]
        for r in range(rho.shape[0]):
            for c in range(rho.shape[1]):
                lines.append(f"{_fmt(cov.frequency_hz)},{r + 1},{c + 1},{_fmt(rho[r, c])}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_matrix_csv(path, matrix) -> None:
    """Frequency-independent matrix as row,col,value rows."""
    lines = ["row,col,value"]
    for r in range(matrix.shape[0]):
        for c in range(matrix.shape[1]):
            lines.append(f"{r + 1},{c + 1},{_fmt(matrix[r, c])}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_covariance_csv(path) -> list[CovarianceMatrix]:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError("empty covariance file", path=path)
    header = lines[0].split(",")
    with_freq = header == ["freq_hz", "row", "col", "value"]
    if not with_freq and header != ["row", "col", "value"]:
        raise ParseError("unexpected covariance header", path=path, line=1)
    cells: dict[float, dict] = defaultdict(dict)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        try:
            if with_freq:
                f, r, c, v = float(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])
            else:
                f = 0.0
                r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
        except (IndexError, ValueError) as exc:
            raise ParseError(f"bad covariance row: {exc}", path=path, line=lineno) from exc
        cells[f][(r, c)] = v
    out = []
    for f in sorted(cells):
        entries = cells[f]
        m = max(r for r, _ in entries)
        rho = np.empty((m, m))
        for (r, c), v in entries.items():
            rho[r - 1, c - 1] = v
        out.append(CovarianceMatrix(rho=rho, frequency_hz=f))
    return out


def write_reflection_csv(path, reflections_db, freqs_hz) -> None:
    lines = ["state_index,freq_hz,reflection_db"]
    for m in range(reflections_db.shape[0]):
        for t, f in enumerate(freqs_hz):
            lines.append(f"{m + 1},{_fmt(f)},{_fmt(reflections_db[m, t])}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_state_table(path, switch_positions, states, ordering) -> None:
    """FAS-port-to-switch-bits table (one row per port, on/off per switch)."""
    cols = ",".join(f"switch_{pos}" for pos in switch_positions)
    lines = [f"fas_port,state_index,{cols}"]
    for port, state_idx in enumerate(ordering, start=1):
        state = states[state_idx - 1]
        bits = ",".join("on" if b else "off" for b in state.switch_bits)
        lines.append(f"{port},{state_idx},{bits}")
    Path(path).write_text("\n".join(lines) + "\n")


def result_to_json(result: RunResult) -> dict:
    doc = {
        "no_solution": result.no_solution,
        "stats": {
            "candidates_tried": result.stats.candidates_tried,
            "matched_sets_found": result.stats.matched_sets_found,
            "best_reflection_db": (None if result.stats.best_reflection_db == float("inf")
                                   else result.stats.best_reflection_db),
        },
    }
    if result.no_solution:
        return doc
    doc.update({
        "delta_e": result.best.delta_e,
        "ordering": list(result.best.ordering),
        "best_set_index": result.best.set_index,
        "switch_positions": list(result.best_set.switch_positions),
        "hardwire": list(result.best_set.hardwire),
        "switch_bits_per_port": [
            list(result.best_set.states[idx - 1].switch_bits)
            for idx in result.best.ordering
        ],
        "per_set": [{"set_index": s.set_index, "m": s.m, "delta_e": s.delta_e}
                    for s in result.per_set],
    })
    return doc


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def write_result_json(outdir: Path, doc: dict) -> None:
    (outdir / "result.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def _heatmap(path, matrix, title):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(matrix, vmin=0.0, vmax=max(1.0, float(np.max(matrix))),
                   origin="upper", cmap="viridis",
                   extent=(0.5, matrix.shape[1] + 0.5, matrix.shape[0] + 0.5, 0.5))
    ax.set_xlabel("FAS port n'")
    ax.set_ylabel("FAS port n")
    ax.set_title(title)
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figures(outdir: Path, sim: np.ndarray, target: np.ndarray,
                   reflections_db: np.ndarray, freqs_hz) -> None:
    """PNG companions of the delimited artifacts."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    _heatmap(outdir / "covariance_sim.png", sim, "Achieved covariance")
    _heatmap(outdir / "covariance_target.png", np.abs(target), "Target covariance")
    _heatmap(outdir / "covariance_abs_error.png", np.abs(sim - np.abs(target)),
             "Absolute error")

    fig, ax = plt.subplots(figsize=(6, 4))
    freqs = np.asarray(freqs_hz)
    if len(freqs) > 1:
        for m in range(reflections_db.shape[0]):
            ax.plot(freqs / 1e9, reflections_db[m], lw=0.8)
        ax.set_xlabel("frequency (GHz)")
    else:
        ax.bar(np.arange(1, reflections_db.shape[0] + 1), reflections_db[:, 0])
        ax.set_xlabel("state index")
    ax.axhline(-10.0, color="red", ls="--", lw=1.0, label="-10 dB")
    ax.set_ylabel("reflection (dB)")
    ax.set_title("State reflection")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(outdir / "reflection.png", dpi=150)
    plt.close(fig)


def emit_run_artifacts(outdir, config, seed: int, result: RunResult) -> None:
    """All artifacts for a completed (or exhausted) pipeline run."""
    outdir = Path(outdir)
    if not outdir.parent.exists():
        raise ConfigError(f"output directory parent does not exist: {outdir.parent}")
    outdir.mkdir(exist_ok=True)
    write_manifest(outdir, config, seed)
    write_result_json(outdir, result_to_json(result))
    if result.no_solution:
        return
    ordering = result.best.ordering
    write_covariance_csv(outdir / "covariance_sim.csv", result.best.rhos, ordering)
    write_matrix_csv(outdir / "covariance_target.csv", np.abs(result.target.rho))
    idx = np.asarray(ordering) - 1
    sim_avg = np.mean([cov.rho[np.ix_(idx, idx)] for cov in result.best.rhos], axis=0)
    error_rows = []
    for cov in result.best.rhos:
        sel = cov.rho[np.ix_(idx, idx)]
        error_rows.append((cov.frequency_hz, np.abs(sel - np.abs(result.target.rho))))
    lines = ["freq_hz,row,col,value"]
    for f, mat in error_rows:
        for r in range(mat.shape[0]):
            for c in range(mat.shape[1]):
                lines.append(f"{_fmt(f)},{r + 1},{c + 1},{_fmt(mat[r, c])}")
    (outdir / "covariance_abs_error.csv").write_text("\n".join(lines) + "\n")
    freqs_hz = [cov.frequency_hz for cov in result.best.rhos]
    write_reflection_csv(outdir / "reflection.csv", result.reflections_db, freqs_hz)
    write_state_table(outdir / "state_table.csv", result.best_set.switch_positions,
                      result.best_set.states, ordering)
    if config.figures:
        render_figures(outdir, sim_avg, result.target.rho,
                       result.reflections_db, freqs_hz)
