"""Command-line surface: train, extract, measure, prune, select, mine, stel,
predict, bench.

Every subcommand reads and writes the CSV formats owned by the library
modules. A config file of key=value lines (keys match long flag names with
underscores) supplies defaults; explicit flags win. Exit codes: 0 success,
1 usage error, 2 data or model error.
"""

from __future__ import annotations

import argparse
import re
import sys

import numpy as np

from . import dataset as ds
from . import interactions as ia
from . import pipeline as pl
from . import pruning as pr
from . import rules as ru
from . import selection as se
from . import stel as st
from . import trees as tr

CONDITION_TABLE_HEADER = "condition"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- report rendering -------------------------------------------------------

_VAR_TOKEN = re.compile(r"\bX(\d+)\b")


def _rename_vars(text: str, schema) -> str:
    def sub(m):
        i = int(m.group(1)) - 1
        if 0 <= i < len(schema):
            return schema[i].name
        return m.group(0)

    return _VAR_TOKEN.sub(sub, text)


def report(header, rows, fmt: str = "csv", schema=None, else_default: bool = False) -> str:
    """Render a table as CSV text or aligned pretty text.

    Pretty mode substitutes schema column names for X<i> tokens and, for
    rule-list tables, shows the default condition as "Else".
    """
    rows = [[str(c) for c in row] for row in rows]
    if fmt == "csv":
        return "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"
    if fmt != "pretty":
        raise UsageError(f"unknown format {fmt!r}")
    pretty = []
    for row in rows:
        row = list(row)
        if "condition" in header:
            ci = header.index("condition")
            if else_default and row[ci] == "TRUE":
                row[ci] = "Else"
            if schema is not None:
                row[ci] = _rename_vars(row[ci], schema)
        pretty.append(row)
    widths = [max(len(h), *(len(r[i]) for r in pretty)) if pretty else len(h)
              for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    for row in pretty:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def write_condition_table(conds, path, schema) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CONDITION_TABLE_HEADER + "\n")
        for c in conds:
            fh.write(ru.print_condition(c, schema) + "\n")


def read_condition_table(path, schema):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != CONDITION_TABLE_HEADER:
        raise ds.DataError(f"{path}: missing condition-table header")
    return [ru.parse_condition(line, schema) for line in lines[1:]]


# --- argument plumbing ------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="key=value file of defaults for this command")
    p.add_argument("--seed", type=int, default=0)


def _add_data(p, required=True):
    p.add_argument("--data", required=required,
                   help="dataset CSV (header row, last column is the target)")
    p.add_argument("--target", help="target column name (default: last column)")


def _load_data(args) -> ds.Dataset:
    return ds.load_csv(args.data, target=getattr(args, "target", None))


def build_parser() -> _Parser:
    parser = _Parser(prog="rulemill",
                     description="Distill tree ensembles into rules and rule lists.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("train", help="train a forest and export its node tables")
    _add_common(p)
    _add_data(p)
    p.add_argument("--out", required=True, help="node-table CSV to write")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--mtry", type=int)
    p.add_argument("--min-leaf", type=int)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--reg", type=float,
                   help="uniform penalty in (0,1] for a regularized build")

    p = sub.add_parser("extract", help="extract conditions or rules from a model")
    _add_common(p)
    _add_data(p)
    p.add_argument("--model", required=True, help="node-table CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--max-depth", type=int, default=6,
                   help="condition depth cutoff; -1 for no limit")
    p.add_argument("--mode", choices=("conditions", "rules"), default="conditions")
    p.add_argument("--cap", type=int, default=2000,
                   help="sample at most this many conditions (seeded)")

    p = sub.add_parser("measure", help="assign outcomes and measure rules")
    _add_common(p)
    _add_data(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--conditions", help="condition CSV to assign outcomes to")
    src.add_argument("--rules", help="rule CSV to re-measure")
    p.add_argument("--out", required=True)
    p.add_argument("--rank", help="comma list among err,freq,len")

    p = sub.add_parser("prune", help="leave-one-out prune each rule")
    _add_common(p)
    _add_data(p)
    p.add_argument("--rules", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, default=0.05)
    p.add_argument("--mode", choices=(pr.RELATIVE, pr.ABSOLUTE), default=pr.RELATIVE)
    p.add_argument("--s", type=float, default=1e-6)

    p = sub.add_parser("select", help="select a compact condition subset")
    _add_common(p)
    _add_data(p)
    p.add_argument("--rules", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lambda0", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--no-rescore", action="store_true")

    p = sub.add_parser("mine", help="mine frequent variable interactions")
    _add_common(p)
    _add_data(p)
    p.add_argument("--rules", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-sup", type=float, default=0.01)
    p.add_argument("--min-conf", type=float, default=0.5)
    p.add_argument("--max-len", type=int, default=3)
    p.add_argument("--numeric-as-variable", action="store_true")
    p.add_argument("--all", action="store_true",
                   help="keep every passing target per lhs, not just the best")

    p = sub.add_parser("stel", help="build an ordered rule list")
    _add_common(p)
    _add_data(p)
    p.add_argument("--rules", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--freq-threshold", type=float, default=0.01)
    p.add_argument("--format", choices=("csv", "pretty"), default="csv",
                   help="also print the list in this format")

    p = sub.add_parser("predict", help="predict with a rule-list model")
    _add_common(p)
    _add_data(p)
    p.add_argument("--model", required=True, help="rule-list CSV")
    p.add_argument("--out", help="write predictions CSV here instead of stdout")

    p = sub.add_parser("bench", help="repeated-split benchmark vs a single CART tree")
    _add_common(p)
    p.add_argument("--dataset", action="append", default=None,
                   help="bundled name (iris, tictactoe, breast), team, or a CSV path; "
                        "repeatable")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--max-depth", type=int, default=6)
    p.add_argument("--format", choices=("csv", "pretty"), default="pretty")
    return parser


def _apply_config(argv):
    """Expand `--config file` into leading key=value flag tokens."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise UsageError("--config needs a file argument")
    path = argv[i + 1]
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    tokens = []
    for ln, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}, line {ln}: expected key=value")
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        flag = "--" + key.replace("_", "-")
        if value.lower() in ("true", "false"):
            if value.lower() == "true":
                tokens.append(flag)
        else:
            tokens.extend([flag, value])
    # config defaults go before explicit flags so the flags win
    return argv[:1] + tokens + argv[1:i] + argv[i + 2:]


def _rule_table(rs, schema, task, fmt="csv", extra=None, else_default=False):
    rows = []
    for i, r in enumerate(rs.rules):
        row = [str(r.length), ru.format_number(r.freq), ru.format_number(r.err),
               ru.print_condition(r.condition, schema),
               r.outcome if task == "classification" else ru.format_number(r.outcome)]
        if extra is not None:
            row.append(ru.format_number(extra[1][i]))
        rows.append(row)
    header = ru.RULE_TABLE_HEADER.split(",")
    if extra is not None:
        header.append(extra[0])
    return report(header, rows, fmt, schema=schema, else_default=else_default)


# --- subcommand bodies ------------------------------------------------------

def _cmd_train(args):
    d = _load_data(args)
    reg = None if args.reg is None else tuple([args.reg] * d.p)
    params = tr.ForestParams(n_trees=args.trees, mtry=args.mtry,
                             min_leaf=args.min_leaf, max_nodes=args.max_nodes,
                             seed=args.seed, regularization=reg)
    ens = tr.build_forest(d, params)
    tr.export_node_tables(ens, args.out)
    oob = tr.oob_error(ens, d)
    print(f"trained {ens.n_trees} trees ({ens.task}) on {d.n} rows, "
          f"{d.p} predictors; oob error {oob:.4f}; wrote {args.out}")
    return 0


def _cmd_extract(args):
    d = _load_data(args)
    ens = tr.import_node_tables(args.model, d.schema, d.target)
    if args.mode == "rules":
        rs = ru.extract_rules(ens)
        measured_rules = []
        for r in rs.rules:
            try:
                measured_rules.append(ru.measured(r, d))
            except ru.UncoveredCondition:
                continue
        rs = ru.RuleSet(measured_rules, provenance=rs.provenance)
        ru.write_rule_table(rs, args.out, d.schema, ens.task)
        print(f"wrote {len(rs)} rules to {args.out}")
    else:
        conds = ru.extract_conditions(ens, args.max_depth)
        conds = pl.cap_conditions(conds, args.cap, args.seed)
        conds = ru.dedup(conds)
        write_condition_table(conds, args.out, d.schema)
        print(f"wrote {len(conds)} unique conditions to {args.out}")
    return 0


def _cmd_measure(args):
    d = _load_data(args)
    if args.conditions:
        conds = read_condition_table(args.conditions, d.schema)
        rs = ru.assign_outcomes(conds, d)
    else:
        rs = ru.read_rule_table(args.rules, d.schema, d.target)
        rs = ru.RuleSet([ru.measured(r, d) for r in rs.rules], provenance=rs.provenance)
    if args.rank:
        keys = tuple(k.strip() for k in args.rank.split(","))
        rs = ru.rank_rules(rs, keys)
    ru.write_rule_table(rs, args.out, d.schema, d.task)
    print(f"wrote {len(rs)} measured rules to {args.out}")
    return 0


def _cmd_prune(args):
    d = _load_data(args)
    rs = ru.read_rule_table(args.rules, d.schema, d.target)
    params = pr.PruneParams(mode=args.mode, threshold=args.threshold, s=args.s)
    pruned = pr.prune_rules(rs, d, params)
    ru.write_rule_table(pruned, args.out, d.schema, d.task)
    print(f"pruned {len(rs)} rules to {args.out}")
    return 0


def _cmd_select(args):
    d = _load_data(args)
    rs = ru.read_rule_table(args.rules, d.schema, d.target)
    params = se.SelectionParams(
        lambda0=args.lambda0, gamma=args.gamma, beta=args.beta,
        rescore=not args.no_rescore,
        forest=tr.ForestParams(n_trees=args.trees, seed=args.seed))
    sel = se.select_conditions([r.condition for r in rs.rules], d, params)
    selected = ru.RuleSet([rs.rules[i] for i in sel.indices])
    ru.write_rule_table(selected, args.out, d.schema, d.task,
                        extra=("score", list(sel.scores)))
    print(f"selected {len(selected)} of {len(rs)} rules (seed {sel.seed}); "
          f"wrote {args.out}")
    return 0


def _cmd_mine(args):
    d = _load_data(args)
    rs = ru.read_rule_table(args.rules, d.schema, d.target)
    ts = ia.itemize(rs, numeric_as_variable=args.numeric_as_variable)
    mined = ia.mine(ts, min_sup=args.min_sup, min_conf=args.min_conf,
                    max_len=args.max_len)
    if not args.all:
        mined = ia.best_per_lhs(mined)
    mined = ia.rank_interactions(mined)
    ia.write_interaction_table(mined, args.out, d.schema, d.task)
    print(f"wrote {len(mined)} interactions to {args.out}")
    return 0


def _cmd_stel(args):
    d = _load_data(args)
    rs = ru.read_rule_table(args.rules, d.schema, d.target)
    rl = st.build_stel(rs, d, freq_threshold=args.freq_threshold)
    st.write_stel_table(rl, args.out)
    err = st.evaluate(rl, d)
    rows = [[str(i + 1), str(r.length), ru.format_number(r.freq),
             ru.format_number(r.err), ru.print_condition(r.condition, d.schema),
             str(r.outcome)] for i, r in enumerate(rl.rules)]
    print(report(st.STEL_TABLE_HEADER.split(","), rows, args.format,
                 schema=d.schema, else_default=(args.format == "pretty")), end="")
    print(f"training error {err:.4f}; wrote {args.out}")
    return 0


def _cmd_predict(args):
    d = _load_data(args)
    rl = st.read_stel_table(args.model, d.schema, d.target)
    pred = st.predict_dataset(rl, d)
    if rl.task == "classification":
        values = [d.target.levels[int(c)] for c in pred]
    else:
        values = [ru.format_number(v) for v in pred]
    text = "\n".join(["pred"] + values) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(values)} predictions to {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_bench(args):
    names = args.dataset or ["team", "iris", "tictactoe", "breast"]
    cfg = pl.PipelineConfig(n_trees=args.trees, max_depth=args.max_depth,
                            seed=args.seed)
    rows = []
    for spec in names:
        name, d = pl.resolve_dataset(spec, seed=args.seed)
        row = pl.bench_dataset(name, d, runs=args.runs, cfg=cfg)
        rows.append([row.dataset, str(row.runs), f"{row.stel_mean:.4f}",
                     f"{row.cart_mean:.4f}", f"{row.relative_difference:.3f}",
                     f"{row.t_statistic:.3f}", f"{row.seconds:.1f}"])
    header = ["dataset", "runs", "stel_err", "cart_err", "rel_diff", "t_stat", "sec"]
    print(report(header, rows, args.format), end="")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "extract": _cmd_extract,
    "measure": _cmd_measure,
    "prune": _cmd_prune,
    "select": _cmd_select,
    "mine": _cmd_mine,
    "stel": _cmd_stel,
    "predict": _cmd_predict,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if argv and argv[0] in _COMMANDS:
            argv = _apply_config(argv)
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ds.DataError, tr.TreeError, ru.ConditionParseError, ru.UncoveredCondition,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
