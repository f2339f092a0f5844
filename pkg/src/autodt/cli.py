"""Command-line entry point (``autodt``)."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__


def _cmd_run(args) -> int:
    from .runner import emit_report, load_config, run_experiment

    cfg = load_config(args.config)
    if args.output:
        from dataclasses import replace
        cfg = replace(cfg, output=args.output)
    result = run_experiment(cfg, workers=args.workers)
    paths = emit_report(result.records, cfg.output, cfg.metrics, alpha=cfg.alpha,
                        plots=not args.no_plots)
    print(f"{len(result.records)} records; wrote {len(paths)} files to {cfg.output}")
    return 0


def _cmd_report(args) -> int:
    from .runner import emit_report, read_records_csv

    records = read_records_csv(Path(args.records).read_text())
    methods = ([m.strip() for m in args.methods.split(",") if m.strip()]
               if args.methods is not None else None)
    paths = emit_report(records, args.out, args.metrics.split(","), methods, args.alpha,
                        plots=not args.no_plots)
    print(f"wrote {len(paths)} files to {args.out}")
    return 0


def _cmd_stats(args) -> int:
    from .stats import HIGHER_BETTER, LOWER_BETTER, rank_report, read_matrix_csv

    m = read_matrix_csv(Path(args.matrix).read_text(),
                        LOWER_BETTER if args.lower_better else HIGHER_BETTER)
    rep = rank_report(m, args.alpha)
    width = max(len(x) for x in m.methods)
    print(f"N={m.n} k={m.k}")
    for name, mean, r in zip(m.methods, rep.means, rep.avg_ranks):
        print(f"  {name:<{width}}  mean={mean:.3f}  avg_rank={r:.3f}")
    f = rep.friedman
    ff = "inf" if f.degenerate else f"{f.f_f:.4f}"
    print(f"Friedman chi2_F={f.chi2_f:.4f}  F_F={ff}  df=({f.df1}, {f.df2})  p={f.p_value:.4g}")
    print(f"Nemenyi CD (alpha={args.alpha:g}) = {rep.cd:.4f}")
    pairs = rep.significant_pairs()
    print("significant pairs: " + (", ".join(f"{a} vs {b}" for a, b in pairs) or "none"))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = Path(args.matrix).stem
        (out / f"{stem}_ranks.csv").write_text(rep.ranks_csv())
        (out / f"{stem}_stats.csv").write_text(rep.stats_csv())
        (out / f"{stem}_cd.dat").write_text(rep.cd_data())
        from .plotting import save_cd_diagram
        save_cd_diagram(rep, out / f"{stem}_cd.png", title=stem)
    return 0


def _cmd_wilcoxon(args) -> int:
    from .stats import count_wins, read_matrix_csv, wilcoxon

    m = read_matrix_csv(Path(args.matrix).read_text())
    a, b = m.column(args.a), m.column(args.b)
    w = count_wins(a, b, args.decimals)
    print(f"wins: {args.a}={w.wins_a} {args.b}={w.wins_b} ties={w.ties}")
    t = wilcoxon(a, b, args.alpha)
    if t.no_decision:
        print("all differences are zero: no decision")
        return 0
    verdict = "reject" if t.reject else "fail to reject"
    print(f"W={t.statistic:g} (W+={t.w_plus:g}, W-={t.w_minus:g}, n={t.n}) "
          f"p={t.p_value:.4g} [{t.method}] -> {verdict} at alpha={args.alpha:g}")
    return 0


def _cmd_inspect_tree(args) -> int:
    from .dtree import load_model, to_text

    tree = load_model(args.model)
    print(f"# {tree.config.describe()}")
    print(f"# nodes={tree.n_nodes} leaves={tree.n_leaves} depth={tree.depth}")
    sys.stdout.write(to_text(tree))
    return 0


def _cmd_fixtures(args) -> int:
    from .fixtures import verify_fixtures

    checks = verify_fixtures(args.alpha)
    for c in checks:
        print(f"{'PASS' if c.ok else 'FAIL'}  {c.name}  {c.detail}")
    failed = sum(not c.ok for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} fixture checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="autodt", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment described by a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--output", help="override the config's output directory")
    r.add_argument("--workers", type=int, help="parallel cells (default: $AUTODT_WORKERS or 1)")
    r.add_argument("--no-plots", action="store_true")
    r.set_defaults(func=_cmd_run)

    rp = sub.add_parser("report", help="re-emit report files from a stored records.csv")
    rp.add_argument("--records", required=True)
    rp.add_argument("--out", required=True)
    rp.add_argument("--metrics", default="accuracy,gmean")
    rp.add_argument("--methods", help="comma-separated method filter")
    rp.add_argument("--alpha", type=float, default=0.05)
    rp.add_argument("--no-plots", action="store_true")
    rp.set_defaults(func=_cmd_report)

    s = sub.add_parser("stats", help="ranks, Friedman and Nemenyi for a result matrix CSV")
    s.add_argument("--matrix", required=True)
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--lower-better", action="store_true")
    s.add_argument("--out", help="directory for rank/stat CSVs and the CD diagram")
    s.set_defaults(func=_cmd_stats)

    w = sub.add_parser("wilcoxon", help="paired signed-rank test of two matrix columns")
    w.add_argument("--matrix", required=True)
    w.add_argument("--a", required=True)
    w.add_argument("--b", required=True)
    w.add_argument("--alpha", type=float, default=0.05)
    w.add_argument("--decimals", type=int, help="round before counting wins")
    w.set_defaults(func=_cmd_wilcoxon)

    t = sub.add_parser("inspect-tree", help="print a saved tree model")
    t.add_argument("model")
    t.set_defaults(func=_cmd_inspect_tree)

    f = sub.add_parser("fixtures", help="replay the bundled published-table fixtures")
    f.add_argument("--verify", action="store_true", required=True)
    f.add_argument("--alpha", type=float, default=0.05)
    f.set_defaults(func=_cmd_fixtures)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"autodt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
