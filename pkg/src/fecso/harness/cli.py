"""Command-line entry point: ``fecso {sweep,score,diag,codeinfo}``.

Exit status is 0 on success, 2 for configuration errors and 3 for I/O
errors.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..codebook import load_code, minimum_distance
from ..partition_theory import parity_difference_table, pentagonal_difference
from .config import ConfigError, ExperimentConfig, config_from_mapping, load_config, validate
from .output import SUMMARY_HEADER, emit_results, rescore_trial_log, summary_rows, write_summary_csv
from .runner import run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.trials is not None:
        changes["trials"] = args.trials
    config = replace(config, **changes)
    problems = validate(config)
    if problems:
        raise ConfigError(problems)
    return config


def cmd_sweep(args) -> int:
    config = load_config(args.config) if args.config else config_from_mapping({})
    config = _apply_overrides(config, args)
    result = run_experiment(config)
    out = Path(args.out)
    if not result.summaries:
        out.mkdir(parents=True, exist_ok=True)
        write_summary_csv([], out / "summary.csv")
        print("no trials requested; wrote an empty summary")
        return EXIT_OK
    written = emit_results(result, out)
    print(f"wrote {len(written)} files to {out}")
    for row in result.summaries:
        bsr = "nan" if row.bsr is None else f"{row.bsr:.4g}"
        print(f"{row.eb_n0_db:6.2f} dB  {row.decoder:<18} L={row.L:<3} {row.so_method:<14} "
              f"BS={row.bs:.4e}  BLER={row.bler:.4e}  BSR={bsr}")
    return EXIT_OK


def cmd_score(args) -> int:
    try:
        rows = rescore_trial_log(args.log, args.bins)
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_summary_csv(rows, out / "summary.csv")
        print(f"wrote {out / 'summary.csv'}")
    else:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        writer.writerows(summary_rows(rows))
    return EXIT_OK


def cmd_diag(args) -> int:
    table = parity_difference_table(args.n)
    top = min(args.max_weight, table.size - 1)
    print(f"distinct partitions with parts <= {args.n}: rho0 - rho1 by weight")
    print("    w  rho0-rho1  pentagonal")
    for w in range(top + 1):
        print(f"{w:5d}  {int(table[w]):9d}  {pentagonal_difference(w):10d}")
    if args.beta:
        for beta in args.beta:
            config = ExperimentConfig(
                code=args.code, decoders=["grand"], so_methods=["naive"], L=[args.L],
                eb_n0_grid=[0.0], trials=args.trials, master_seed=args.seed or 0,
                stop_policy="level_complete", delta_diagnostics=True, synthetic_linear_beta=beta,
            )
            problems = validate(config)
            if problems:
                raise ConfigError(problems)
            d = run_experiment(config).diagnostics[(0, "grand", args.L)]
            ok = d["w_star"] >= 0
            ok &= ~np.isnan(d["delta_bound"])
            delta = np.abs(d["delta"][ok])
            bound = d["delta_bound"][ok]
            print(f"beta={beta:g}: {int(ok.sum())} of {args.trials} trials qualify (w* <= n)")
            if ok.any():
                within = float(np.mean(delta <= bound * (1 + 1e-9) + 1e-15))
                print(f"  |delta| <= bound in {100 * within:.2f}% of them; "
                      f"median |delta| = {np.median(delta):.4e}, median bound = {np.median(bound):.4e}, "
                      f"2^-n = {2.0 ** -load_code(args.code).n:.4e}")
    return EXIT_OK


def cmd_codeinfo(args) -> int:
    try:
        code = load_code(args.code)
    except ValueError as exc:
        raise ConfigError([f"code: {exc}"]) from exc
    print(f"name: {code.name}")
    print(f"n: {code.n}")
    print(f"k: {code.k}")
    print(f"rate: {code.rate:.6g}")
    if code.k <= 20:
        print(f"d: {minimum_distance(code)}")
    else:
        print("d: not computed (k > 20)")
    print(f"even: {'yes' if code.is_even else 'no'}")
    print(f"information positions: {list(code.info_positions)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fecso", description="Blockwise soft-output experiments for GRAND and GCD.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run a configured Monte-Carlo sweep")
    sweep.add_argument("--config", help="YAML configuration file (defaults apply when omitted)")
    sweep.add_argument("--out", default="results", help="output directory")
    sweep.add_argument("--seed", type=int, help="override master_seed")
    sweep.add_argument("--workers", type=int, help="override the worker-process count")
    sweep.add_argument("--trials", type=int, help="override trials per point")
    sweep.set_defaults(func=cmd_sweep)

    score = sub.add_parser("score", help="re-score a per-trial log (trials.jsonl)")
    score.add_argument("log", help="path to trials.jsonl")
    score.add_argument("--out", help="directory for summary.csv (stdout when omitted)")
    score.add_argument("--bins", type=int, default=100, help="decomposition bins")
    score.set_defaults(func=cmd_score)

    diag = sub.add_parser("diag", help="partition parity tables and synthetic delta reports")
    diag.add_argument("--n", type=int, default=16, help="largest part (code length)")
    diag.add_argument("--max-weight", type=int, default=40, help="last weight in the table")
    diag.add_argument("--beta", type=float, action="append", help="run a synthetic delta check at this slope")
    diag.add_argument("--code", default="ebch16_11")
    diag.add_argument("--L", type=int, default=1, help="list size for the delta check")
    diag.add_argument("--trials", type=int, default=2000)
    diag.add_argument("--seed", type=int)
    diag.set_defaults(func=cmd_diag)

    info = sub.add_parser("codeinfo", help="print n, k, d and evenness of a code")
    info.add_argument("--code", default="ebch16_11", help="built-in name or code file")
    info.set_defaults(func=cmd_codeinfo)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
