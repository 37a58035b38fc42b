"""Result files: aggregate CSV, per-trial JSON lines and plot series."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
import yaml

from ..scoring import ScoreAccumulator, ScoreSummary, bsr, summarize
from .runner import ExperimentResult

SUMMARY_HEADER = (
    "eb_n0_db", "decoder", "so_method", "L", "trials", "bler", "bs", "bs_calibration", "bs_refinement", "bsr",
)
DIAGNOSTIC_HEADER = ("trial", "eb_n0_db", "decoder", "L", "w_star", "beta", "delta_observed", "delta_bound", "qualified")


def _num(x) -> str:
    if x is None:
        return "nan"
    return repr(float(x))


def _json_num(x):
    x = float(x)
    return None if math.isnan(x) else x


def summary_rows(summaries) -> list[list[str]]:
    return [
        [
            _num(s.eb_n0_db), s.decoder, s.so_method, str(s.L), str(s.n), _num(s.bler), _num(s.bs),
            _num(s.calibration_term), _num(s.refinement_term), _num(s.bsr),
        ]
        for s in summaries
    ]


def write_summary_csv(summaries, path) -> Path:
    """Write the aggregate table; an empty summary list gives a header-only file."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        writer.writerows(summary_rows(summaries))
    return path


def read_summary_csv(path) -> list[ScoreSummary]:
    out = []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != SUMMARY_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            bsr = float(row["bsr"])
            out.append(
                ScoreSummary(
                    float(row["eb_n0_db"]), row["decoder"], row["so_method"], int(row["L"]), int(row["trials"]),
                    float(row["bs"]), float(row["bs_calibration"]), float(row["bs_refinement"]),
                    float(row["bler"]), None if math.isnan(bsr) else bsr,
                )
            )
    return out


def plot_series(summaries) -> dict[tuple[str, str, int], list[ScoreSummary]]:
    """Group summaries into one (Eb/N0, BS) series per (decoder, method, L)."""
    series: dict[tuple[str, str, int], list[ScoreSummary]] = {}
    for s in summaries:
        series.setdefault((s.decoder, s.so_method, s.L), []).append(s)
    for rows in series.values():
        rows.sort(key=lambda r: r.eb_n0_db)
    return series


def write_plot_data(summaries, directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for (decoder, method, L), rows in plot_series(summaries).items():
        path = directory / f"bs_{decoder}_{method}_L{L}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("eb_n0_db", "bs", "bler", "bsr"))
            for r in rows:
                writer.writerow((_num(r.eb_n0_db), _num(r.bs), _num(r.bler), _num(r.bsr)))
        paths.append(path)
    return paths


def iter_trial_records(result: ExperimentResult):
    """Per-trial records in (point, decoder, L, method, trial) order."""
    config = result.config
    if result.forecasts is None:
        raise ValueError("per-trial forecasts were not kept for this run")
    diagnostics = result.diagnostics or {}
    for (point, decoder, L, method), (s, o) in result.forecasts.items():
        eb = float(config.eb_n0_grid[point])
        q = result.queries[(point, decoder, L)]
        diag = diagnostics.get((point, decoder, L))
        for t in range(s.size):
            yield {
                "trial": t,
                "eb_n0_db": eb,
                "decoder": decoder,
                "so_method": method,
                "L": L,
                "s": float(s[t]),
                "o": int(o[t]),
                "num_queries": int(q[t]),
                "delta": None if diag is None else _json_num(diag["delta"][t]),
                "delta_bound": None if diag is None else _json_num(diag["delta_bound"][t]),
            }


def write_trial_log(result: ExperimentResult, path) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        for record in iter_trial_records(result):
            fh.write(json.dumps(record) + "\n")
    return path


def write_diagnostics(result: ExperimentResult, path) -> Path:
    path = Path(path)
    grid = result.config.eb_n0_grid
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DIAGNOSTIC_HEADER)
        for (point, decoder, L), d in result.diagnostics.items():
            for t in range(d["delta"].size):
                qualified = int(d["w_star"][t]) >= 0 and not np.isnan(d["delta_bound"][t])
                writer.writerow(
                    (
                        t, _num(grid[point]), decoder, L, int(d["w_star"][t]), _num(d["beta"][t]),
                        _num(d["delta"][t]), _num(d["delta_bound"][t]), int(qualified),
                    )
                )
    return path


def emit_results(result: ExperimentResult, out_dir) -> dict[str, Path]:
    """Write every output of a finished run under ``out_dir``.

    Always writes ``summary.csv``, ``config.yaml`` and one plot series per
    (decoder, method, L) under ``plots/``; ``trials.jsonl`` and
    ``delta_diagnostics.csv`` follow the config switches.
    """
    if not result.summaries:
        raise ValueError("no summaries to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {
        "summary": write_summary_csv(result.summaries, out / "summary.csv"),
        "config": out / "config.yaml",
    }
    written["config"].write_text(yaml.safe_dump(result.config.to_dict(), sort_keys=True))
    for path in write_plot_data(result.summaries, out / "plots"):
        written[f"plot:{path.stem}"] = path
    if result.config.per_trial_log:
        written["trials"] = write_trial_log(result, out / "trials.jsonl")
    if result.diagnostics:
        written["diagnostics"] = write_diagnostics(result, out / "delta_diagnostics.csv")
    return written


def rescore_trial_log(path, bins: int = 100) -> list[ScoreSummary]:
    """Rebuild the aggregate table from a ``trials.jsonl`` file."""
    cells: dict[tuple, tuple[list, list]] = {}
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (float(rec["eb_n0_db"]), rec["decoder"], int(rec["L"]), rec["so_method"])
                s, o = float(rec["s"]), int(rec["o"])
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad trial record ({exc})") from exc
            cell = cells.setdefault(key, ([], []))
            cell[0].append(s)
            cell[1].append(o)
    rows = []
    for (eb, decoder, L, method), (s, o) in cells.items():
        acc = ScoreAccumulator(bins)
        acc.update(s, o)
        rows.append(summarize(acc, eb, decoder, method, L))
    reference: dict[float, float] = {}
    for r in rows:
        reference[r.eb_n0_db] = min(reference.get(r.eb_n0_db, math.inf), r.bler)
    return [
        ScoreSummary(r.eb_n0_db, r.decoder, r.so_method, r.L, r.n, r.bs, r.calibration_term,
                     r.refinement_term, r.bler, bsr(r.bs, reference[r.eb_n0_db]))
        for r in rows
    ]
