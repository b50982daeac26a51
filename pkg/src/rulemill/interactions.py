"""Frequent variable-value interactions via association-rule mining.

Every extracted rule becomes one transaction whose items are its
variable-value pairs plus exactly one target-value pair. Association rules
are restricted to variable-value items on the left-hand side and the target
item on the right; support is the share of transactions containing the
left-hand side. Mining is exact level-wise enumeration (no sampling).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .rules import OP_IN, RULE_TABLE_HEADER, RuleSet, Term, format_number, print_condition

# items are plain tuples so they hash and sort cheaply:
#   ("in", var, sorted-level-codes) / ("<=", var, value) / (">", var, value)
#   ("var", var)        bare-variable item (numeric-as-variable mode)
#   ("target", value)   the right-hand-side item

INTERACTION_TABLE_HEADER = "len,sup,conf,condition,pred"


@dataclass(frozen=True)
class Transaction:
    """Item set of one rule: its condition items plus one target item."""

    items: frozenset
    target: tuple

    def __post_init__(self):
        if self.target[0] != "target":
            raise ValueError("transaction target must be a target item")


@dataclass(frozen=True)
class AssociationRule:
    """lhs (variable items) => target item, with support and confidence."""

    lhs: frozenset
    rhs: tuple
    support: float
    confidence: float

    @property
    def lhs_length(self) -> int:
        return len(self.lhs)

    @property
    def length(self) -> int:
        return len(self.lhs) + 1


def _term_item(t: Term):
    if t.op == OP_IN:
        return (OP_IN, t.var, tuple(sorted(t.value)))
    return (t.op, t.var, t.value)


def itemize(rs: RuleSet, numeric_as_variable: bool = False) -> list[Transaction]:
    """One transaction per rule; rules must have assigned outcomes.

    With numeric_as_variable, numeric-threshold terms collapse to a bare
    variable item, so different thresholds on one variable pool together.
    """
    out = []
    for r in rs.rules:
        items = set()
        for t in r.condition.terms:
            if numeric_as_variable and t.op != OP_IN:
                items.add(("var", t.var))
            else:
                items.add(_term_item(t))
        out.append(Transaction(frozenset(items), ("target", r.outcome)))
    return out


def _item_sort_key(item):
    return (item[0], item[1] if len(item) > 1 else 0, repr(item[2:]))


def mine(ts, min_sup: float = 0.01, min_conf: float = 0.5,
         max_len: int = 3) -> list[AssociationRule]:
    """Exact Apriori over transactions; lhs sizes run up to max_len - 1.

    Emits one rule per (frequent lhs, target value) pair whose confidence
    reaches min_conf; support is the lhs share of all transactions.
    """
    if not (0.0 < min_sup <= 1.0) or not (0.0 < min_conf <= 1.0):
        raise ValueError("min_sup and min_conf must lie in (0, 1]")
    if max_len < 2:
        raise ValueError("max_len must be >= 2")
    ts = list(ts)
    n = len(ts)
    if n == 0:
        return []

    min_count = min_sup * n
    lhs_counts: dict[frozenset, int] = {}
    target_counts: dict[frozenset, dict] = {}

    singles: dict = {}
    for t in ts:
        for item in t.items:
            singles[item] = singles.get(item, 0) + 1
    frequent = [frozenset([i])
                for i, c in sorted(singles.items(),
                                   key=lambda kv: _item_sort_key(kv[0]))
                if c >= min_count]

    size = 1
    while frequent and size <= max_len - 1:
        counts = dict.fromkeys(frequent, 0)
        by_target: dict[frozenset, dict] = {key: {} for key in frequent}
        for t in ts:
            if len(t.items) < size:
                continue
            for sub in combinations(sorted(t.items, key=_item_sort_key), size):
                key = frozenset(sub)
                if key in counts:
                    counts[key] += 1
                    tc = by_target[key]
                    tc[t.target] = tc.get(t.target, 0) + 1
        survivors = [key for key in frequent if counts[key] >= min_count]
        for key in survivors:
            lhs_counts[key] = counts[key]
            target_counts[key] = by_target[key]
        # join step: unite frequent size-sets whose union grows by one item
        # and whose every sub-itemset is itself frequent
        size += 1
        if size > max_len - 1:
            break
        survivor_set = set(survivors)
        seen = set()
        nxt = []
        for a, b in combinations(survivors, 2):
            cand = a | b
            if len(cand) != size or cand in seen:
                continue
            seen.add(cand)
            if all(frozenset(sub) in survivor_set
                   for sub in combinations(cand, size - 1)):
                nxt.append(cand)
        frequent = nxt

    out = []
    for lhs in sorted(lhs_counts, key=lambda s: tuple(sorted(map(_item_sort_key, s)))):
        base = lhs_counts[lhs]
        for target, c in sorted(target_counts[lhs].items(), key=lambda tc: repr(tc[0])):
            conf = c / base
            if conf >= min_conf:
                out.append(AssociationRule(lhs, target, support=base / n,
                                           confidence=conf))
    return out


_RANK_KEYS = {
    "support": lambda r: -r.support,
    "confidence": lambda r: -r.confidence,
    "length": lambda r: -r.length,
}


def rank_interactions(rules, keys=("support", "confidence", "length")):
    """Stable sort by the given keys, each descending."""
    for key in keys:
        if key not in _RANK_KEYS:
            raise ValueError(f"unknown ranking key {key!r}")
    return sorted(rules, key=lambda r: tuple(_RANK_KEYS[k](r) for k in keys))


def best_per_lhs(rules) -> list[AssociationRule]:
    """Keep only the highest-confidence target per left-hand side."""
    best: dict[frozenset, AssociationRule] = {}
    for r in rules:
        cur = best.get(r.lhs)
        if cur is None or r.confidence > cur.confidence:
            best[r.lhs] = r
    return list(best.values())


def _item_text(item, schema) -> str:
    kind = item[0]
    if kind == "var":
        return f"X{item[1] + 1}"
    if kind == OP_IN:
        levels = schema[item[1]].levels
        toks = ",".join(levels[i] for i in item[2])
        return f"X{item[1] + 1} in {{{toks}}}"
    return f"X{item[1] + 1} {kind} {format_number(item[2])}"


def interaction_text(r: AssociationRule, schema) -> str:
    """Left-hand side rendered in the condition grammar (bare vars as X<i>)."""
    items = sorted(r.lhs, key=_item_sort_key)
    items = sorted(items, key=lambda it: (it[1], it[0]))
    return " & ".join(_item_text(it, schema) for it in items)


def write_interaction_table(rules, path, schema, task) -> None:
    """CSV `len,sup,conf,condition,pred`; len counts left-hand-side items."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(INTERACTION_TABLE_HEADER + "\n")
        for r in rules:
            pred = r.rhs[1] if task == "classification" else format_number(r.rhs[1])
            fh.write(
                f"{r.lhs_length},{format_number(r.support)},"
                f"{format_number(r.confidence)},{interaction_text(r, schema)},{pred}\n"
            )
