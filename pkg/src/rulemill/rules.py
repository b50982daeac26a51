"""Rule and condition model: extraction from ensembles, metrics, text grammar.

A condition is a conjunction of variable-value terms in canonical form:
terms sorted by (variable, operator), at most one set term or one
interval-bound pair per variable. The text grammar is

    condition := term (" & " term)* | "TRUE"
    term      := var " in " "{" token ("," token)* "}"
               | var " <= " number | var " > " number
    var       := "X" positive-integer        (1-based predictor index)

Variables are stored zero-based internally and printed one-based.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, DataError, Dataset

OP_IN = "in"
OP_LE = "<="
OP_GT = ">"
_OP_RANK = {OP_IN: 0, OP_LE: 1, OP_GT: 2}

RULE_TABLE_HEADER = "len,freq,err,condition,pred"


class InfeasibleCondition(ValueError):
    """A conjunction whose terms cannot be satisfied simultaneously."""


class UncoveredCondition(ValueError):
    """A condition satisfied by no instance of the measuring dataset."""


class ConditionParseError(ValueError):
    """Syntax or semantic error in condition text; carries a byte offset."""

    def __init__(self, message, offset):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class ExtractionWarning(UserWarning):
    """Non-fatal problems while extracting rules (e.g. impossible paths)."""


@dataclass(frozen=True)
class Term:
    """One variable-value pair: var `in` level-set, or var <=/> threshold."""

    var: int
    op: str
    value: object  # frozenset of level codes for OP_IN, float otherwise

    def __post_init__(self):
        if self.op not in _OP_RANK:
            raise ValueError(f"unknown operator {self.op!r}")
        if self.op == OP_IN:
            if not isinstance(self.value, frozenset) or not self.value:
                raise ValueError("set term needs a non-empty frozenset of level codes")
        else:
            object.__setattr__(self, "value", float(self.value))

    def sort_key(self):
        if self.op == OP_IN:
            return (self.var, _OP_RANK[self.op], tuple(sorted(self.value)))
        return (self.var, _OP_RANK[self.op], self.value)


@dataclass(frozen=True)
class Condition:
    """Canonical conjunction of terms; the empty condition matches everything."""

    terms: tuple[Term, ...] = ()

    @property
    def length(self) -> int:
        return len(self.terms)

    def is_empty(self) -> bool:
        return not self.terms


TRUE = Condition()


def canonical(terms) -> Condition:
    """Merge and order raw terms into a canonical Condition.

    Same-variable numeric bounds are intersected (keeping the tightest <=
    and > values); same-variable level sets are intersected. Raises
    InfeasibleCondition for an empty interval or empty set.
    """
    by_var: dict[int, dict] = {}
    for t in terms:
        slot = by_var.setdefault(t.var, {})
        if t.op == OP_IN:
            cur = slot.get(OP_IN)
            merged = t.value if cur is None else cur & t.value
            if not merged:
                raise InfeasibleCondition(f"X{t.var + 1}: empty level set")
            slot[OP_IN] = merged
        elif t.op == OP_LE:
            cur = slot.get(OP_LE)
            slot[OP_LE] = t.value if cur is None else min(cur, t.value)
        else:
            cur = slot.get(OP_GT)
            slot[OP_GT] = t.value if cur is None else max(cur, t.value)
    out = []
    for var in sorted(by_var):
        slot = by_var[var]
        if OP_IN in slot and (OP_LE in slot or OP_GT in slot):
            raise InfeasibleCondition(f"X{var + 1}: mixed set and interval terms")
        if OP_LE in slot and OP_GT in slot and slot[OP_GT] >= slot[OP_LE]:
            raise InfeasibleCondition(f"X{var + 1}: empty interval")
        if OP_IN in slot:
            out.append(Term(var, OP_IN, slot[OP_IN]))
        if OP_LE in slot:
            out.append(Term(var, OP_LE, slot[OP_LE]))
        if OP_GT in slot:
            out.append(Term(var, OP_GT, slot[OP_GT]))
    return Condition(tuple(out))


@dataclass(frozen=True)
class Rule:
    """A condition with an assigned outcome and (optionally) measured metrics."""

    condition: Condition
    outcome: object  # level token (classification) or float (regression)
    freq: float | None = None
    err: float | None = None

    @property
    def length(self) -> int:
        return self.condition.length


@dataclass
class RuleSet:
    rules: list[Rule]
    provenance: dict | None = None

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)


def term_mask(t: Term, d: Dataset) -> np.ndarray:
    """Boolean satisfaction vector of one term over all dataset rows."""
    cs = d.schema[t.var]
    col = d.columns[t.var]
    if t.op == OP_IN:
        if cs.kind != CATEGORICAL:
            raise DataError(f"X{t.var + 1}: set term on a numeric column")
        member = np.zeros(cs.n_levels, dtype=bool)
        member[list(t.value)] = True
        return member[col]
    if cs.kind != NUMERIC:
        raise DataError(f"X{t.var + 1}: interval term on a categorical column")
    return col <= t.value if t.op == OP_LE else col > t.value


def condition_mask(c: Condition, d: Dataset) -> np.ndarray:
    mask = np.ones(d.n, dtype=bool)
    for t in c.terms:
        mask &= term_mask(t, d)
    return mask


def satisfies(c: Condition, x, schema) -> bool:
    """Whether one raw instance satisfies the condition (unknown levels: no)."""
    for t in c.terms:
        cs = schema[t.var]
        v = x[t.var]
        if t.op == OP_IN:
            if cs.code(str(v)) not in t.value:
                return False
        else:
            v = float(v)
            if t.op == OP_LE:
                if not v <= t.value:
                    return False
            elif not v > t.value:
                return False
    return True


def _branch_terms(table, i, schema):
    """(left_term, right_term) encoding the split predicate of node i."""
    var = int(table.split_var[i]) - 1
    cs = schema[var]
    if cs.kind == NUMERIC:
        point = float(table.split_point[i])
        return Term(var, OP_LE, point), Term(var, OP_GT, point)
    mask = int(table.split_point[i])
    inset = frozenset(l for l in range(cs.n_levels) if mask >> l & 1)
    outset = frozenset(range(cs.n_levels)) - inset
    return Term(var, OP_IN, inset), Term(var, OP_IN, outset)


def extract_rules(e) -> RuleSet:
    """One rule per leaf per tree: the path conjunction and the leaf outcome.

    Left children contribute the node predicate, right children its
    complement. Paths whose conjunction is infeasible (possible only in
    malformed imported trees) are dropped with a warning.
    """
    rules = []
    for ti, t in enumerate(e.trees, start=1):
        stack = [(1, [])]
        while stack:
            nid, terms = stack.pop()
            i = nid - 1
            if t.status[i] == -1:
                try:
                    cond = canonical(terms)
                except InfeasibleCondition as exc:
                    warnings.warn(
                        f"tree {ti}, leaf {nid}: impossible path dropped ({exc})",
                        ExtractionWarning,
                        stacklevel=2,
                    )
                    continue
                rules.append(Rule(cond, t.pred[i]))
                continue
            lt, rt = _branch_terms(t, i, e.schema)
            stack.append((int(t.right[i]), terms + [rt]))
            stack.append((int(t.left[i]), terms + [lt]))
    return RuleSet(rules, provenance={"n_trees": e.n_trees, "source": "leaves"})


def extract_conditions(e, max_depth: int = -1) -> list[Condition]:
    """Path conditions at leaves and at nodes where depth hits max_depth.

    The root has depth 1; max_depth -1 disables the cutoff (leaf conditions
    only, equivalent to the conditions of extract_rules).
    """
    if max_depth != -1 and max_depth < 1:
        raise ValueError("max_depth must be -1 or >= 1")
    out = []
    for ti, t in enumerate(e.trees, start=1):
        stack = [(1, 1, [])]
        while stack:
            nid, depth, terms = stack.pop()
            i = nid - 1
            if t.status[i] == -1 or depth == max_depth:
                try:
                    out.append(canonical(terms))
                except InfeasibleCondition as exc:
                    warnings.warn(
                        f"tree {ti}, node {nid}: impossible path dropped ({exc})",
                        ExtractionWarning,
                        stacklevel=2,
                    )
                continue
            lt, rt = _branch_terms(t, i, e.schema)
            stack.append((int(t.right[i]), depth + 1, terms + [rt]))
            stack.append((int(t.left[i]), depth + 1, terms + [lt]))
    return out


def dedup(conds) -> list[Condition]:
    """Drop duplicate canonical conditions, keeping first-occurrence order."""
    return list(dict.fromkeys(conds))


def measure(r: Rule, d: Dataset) -> tuple[int, float, float]:
    """(length, frequency, error) of a rule on a dataset.

    Classification error is the misclassified share of covered instances;
    regression error is the mean squared deviation of covered targets from
    their own mean. Raises UncoveredCondition when nothing is covered.
    """
    mask = condition_mask(r.condition, d)
    covered = int(mask.sum())
    if covered == 0:
        raise UncoveredCondition("condition covers no instance")
    freq = covered / d.n
    if d.task == "classification":
        code = d.target.code(str(r.outcome))
        err = float(np.mean(d.y[mask] != code))
    else:
        err = float(np.var(d.y[mask]))
    return r.length, freq, err


def measured(r: Rule, d: Dataset) -> Rule:
    """Copy of the rule with freq/err filled in from `measure`."""
    _, freq, err = measure(r, d)
    return replace(r, freq=freq, err=err)


def assign_outcome(c: Condition, d: Dataset) -> Rule:
    """Rule for a condition with the outcome taken from the covered instances.

    Classification: most frequent covered class (ties resolve to the earlier
    target level). Regression: mean covered target. The rule comes back
    measured. Raises UncoveredCondition for zero coverage.
    """
    if d.n == 0:
        raise DataError("cannot assign outcomes on an empty dataset")
    mask = condition_mask(c, d)
    covered = int(mask.sum())
    if covered == 0:
        raise UncoveredCondition("condition covers no instance")
    if d.task == "classification":
        counts = np.bincount(d.y[mask], minlength=d.target.n_levels)
        code = int(np.argmax(counts))
        outcome = d.target.levels[code]
        err = 1.0 - counts[code] / covered
    else:
        outcome = float(np.mean(d.y[mask]))
        err = float(np.var(d.y[mask]))
    return Rule(c, outcome, freq=covered / d.n, err=float(err))


def assign_outcomes(conds, d: Dataset) -> RuleSet:
    """assign_outcome over a condition list; uncovered conditions are dropped
    with a warning rather than raised."""
    rules = []
    dropped = 0
    for c in conds:
        try:
            rules.append(assign_outcome(c, d))
        except UncoveredCondition:
            dropped += 1
    if dropped:
        warnings.warn(f"dropped {dropped} uncovered condition(s)", ExtractionWarning,
                      stacklevel=2)
    return RuleSet(rules, provenance={"source": "assigned"})


_SORT_KEYS = {
    "err": lambda r: r.err,
    "freq": lambda r: -r.freq,
    "len": lambda r: r.length,
}


def rank_rules(rs: RuleSet, keys=("err", "freq", "len")) -> RuleSet:
    """Stable lexicographic sort: err ascending, freq descending, len ascending."""
    for key in keys:
        if key not in _SORT_KEYS:
            raise ValueError(f"unknown ranking key {key!r}")
    for r in rs.rules:
        if r.freq is None or r.err is None:
            raise ValueError("rank_rules requires measured rules")
    ordered = sorted(rs.rules, key=lambda r: tuple(_SORT_KEYS[k](r) for k in keys))
    return RuleSet(ordered, provenance=rs.provenance)


# --- text grammar -----------------------------------------------------------

_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_VAR_RE = re.compile(r"X(\d+)")


def format_number(v: float) -> str:
    return repr(float(v))


def print_condition(c: Condition, schema) -> str:
    """Canonical text of a condition ("TRUE" when empty)."""
    if c.is_empty():
        return "TRUE"
    parts = []
    for t in c.terms:
        name = f"X{t.var + 1}"
        if t.op == OP_IN:
            levels = schema[t.var].levels
            toks = ",".join(levels[i] for i in sorted(t.value))
            parts.append(f"{name} in {{{toks}}}")
        else:
            parts.append(f"{name} {t.op} {format_number(t.value)}")
    return " & ".join(parts)


def parse_condition(text: str, schema) -> Condition:
    """Parse condition text against a predictor schema; inverse of print."""
    if text == "TRUE":
        return TRUE
    pos = 0
    terms = []
    n = len(text)
    while True:
        m = _VAR_RE.match(text, pos)
        if not m:
            raise ConditionParseError("expected variable like X1", pos)
        var = int(m.group(1)) - 1
        if not (0 <= var < len(schema)):
            raise ConditionParseError(f"unknown variable index X{m.group(1)}", pos)
        cs = schema[var]
        pos = m.end()
        if text.startswith(" in {", pos):
            if cs.kind != CATEGORICAL:
                raise ConditionParseError(
                    f"set operator on numeric variable X{var + 1}", pos)
            pos += len(" in {")
            end = text.find("}", pos)
            if end < 0:
                raise ConditionParseError("unterminated level set", pos)
            body = text[pos:end]
            toks = body.split(",")
            if body == "" or any(tok == "" for tok in toks):
                raise ConditionParseError("empty level token in set", pos)
            codes = set()
            for tok in toks:
                code = cs.code(tok)
                if code < 0:
                    raise ConditionParseError(
                        f"unknown level {tok!r} for X{var + 1}", pos)
                codes.add(code)
            if len(codes) >= cs.n_levels:
                raise ConditionParseError(
                    f"level set for X{var + 1} covers all levels", pos)
            terms.append(Term(var, OP_IN, frozenset(codes)))
            pos = end + 1
        else:
            op = None
            for cand in (" <= ", " > "):
                if text.startswith(cand, pos):
                    op = cand.strip()
                    pos += len(cand)
                    break
            if op is None:
                raise ConditionParseError("expected ' in {', ' <= ' or ' > '", pos)
            if cs.kind != NUMERIC:
                raise ConditionParseError(
                    f"interval operator on categorical variable X{var + 1}", pos)
            m = _NUMBER_RE.match(text, pos)
            if not m:
                raise ConditionParseError("expected a decimal number", pos)
            terms.append(Term(var, op, float(m.group(0))))
            pos = m.end()
        if pos == n:
            break
        if not text.startswith(" & ", pos):
            raise ConditionParseError("expected ' & ' between terms", pos)
        pos += 3
    try:
        return canonical(terms)
    except InfeasibleCondition as exc:
        raise ConditionParseError(str(exc), 0) from None


# --- rule table CSV ---------------------------------------------------------

def _format_outcome(outcome, task) -> str:
    return outcome if task == "classification" else format_number(outcome)


def write_rule_table(rs: RuleSet, path, schema, task, extra=None) -> None:
    """Write measured rules as CSV `len,freq,err,condition,pred`.

    `extra` optionally maps a column name to per-rule values appended after
    `pred` (used for selection scores).
    """
    header = RULE_TABLE_HEADER
    if extra:
        name, values = extra
        header += f",{name}"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for i, r in enumerate(rs.rules):
            if r.freq is None or r.err is None:
                raise ValueError("cannot write unmeasured rules")
            row = (
                f"{r.length},{format_number(r.freq)},{format_number(r.err)},"
                f"{print_condition(r.condition, schema)},"
                f"{_format_outcome(r.outcome, task)}"
            )
            if extra:
                row += f",{format_number(extra[1][i])}"
            fh.write(row + "\n")


def read_rule_table(path, schema, target) -> RuleSet:
    """Read a rule table written by write_rule_table (extra columns ignored)."""
    task = "classification" if target.kind == CATEGORICAL else "regression"
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith(RULE_TABLE_HEADER):
        raise DataError(f"{path}: missing rule-table header")
    rules = []
    for ln, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) < 5:
            raise DataError(f"{path}, line {ln}: expected at least 5 cells")
        # conditions contain commas inside level sets; pred and any extra
        # numeric column never do, so the condition spans the middle cells
        n_extra = len(lines[0].split(",")) - 5
        cond_text = ",".join(cells[3:len(cells) - 1 - n_extra])
        pred_s = cells[len(cells) - 1 - n_extra]
        try:
            length = int(cells[0])
            freq = float(cells[1])
            err = float(cells[2])
        except ValueError as exc:
            raise DataError(f"{path}, line {ln}: {exc}") from None
        cond = parse_condition(cond_text, schema)
        if cond.length != length:
            raise DataError(
                f"{path}, line {ln}: len column {length} != condition length {cond.length}"
            )
        if task == "classification":
            if pred_s not in target.levels:
                raise DataError(f"{path}, line {ln}: unknown outcome {pred_s!r}")
            outcome = pred_s
        else:
            outcome = float(pred_s)
        rules.append(Rule(cond, outcome, freq=freq, err=err))
    return RuleSet(rules, provenance={"source": str(path)})
