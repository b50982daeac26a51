"""Ordered rule-list learner summarizing a rule set (STEL).

The list is built by sequential covering: at each iteration every candidate
is re-measured on the still-uncovered instances, the best rule by
(error asc, frequency desc, length asc, original order) is appended, and the
instances it covers are removed. A default rule with an empty condition
closes the list, so prediction (first matching rule, top to bottom) is total.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CATEGORICAL, ColumnSchema, DataError, Dataset
from .rules import (Condition, Rule, RuleSet, TRUE, condition_mask,
                    format_number, parse_condition, print_condition, satisfies)

STEL_TABLE_HEADER = "position,len,freq,err,condition,pred"


@dataclass(frozen=True)
class RuleList:
    """Ordered rules ending in the default rule; first match predicts.

    Each rule's freq/err are the values measured at the iteration it was
    selected (freq relative to the full training size), not its stand-alone
    metrics.
    """

    rules: tuple[Rule, ...]
    schema: tuple[ColumnSchema, ...]
    target: ColumnSchema

    def __post_init__(self):
        if not self.rules:
            raise ValueError("rule list cannot be empty")
        if not self.rules[-1].condition.is_empty():
            raise ValueError("last rule must be the default rule")
        for r in self.rules[:-1]:
            if r.condition.is_empty():
                raise ValueError("only the terminal rule may be the default")

    @property
    def task(self) -> str:
        return "classification" if self.target.kind == CATEGORICAL else "regression"

    def __len__(self):
        return len(self.rules)


def _majority(y, target):
    counts = np.bincount(y, minlength=target.n_levels)
    code = int(np.argmax(counts))
    return target.levels[code], code, counts


def build_stel(rs: RuleSet, d: Dataset, freq_threshold: float = 0.01) -> RuleList:
    """Build an ordered rule list from measured rules.

    Rules below freq_threshold (as measured on the full data) are dropped
    from the candidate pool. Candidates keep their assigned outcomes; only
    metrics are re-evaluated on the remaining data each iteration, and rules
    covering nothing that remains sit out that iteration. The default rule
    is recomputed from the remaining instances; when it wins an iteration it
    ends the list, and if no instance remains the default falls back to the
    majority class (or mean) of the original training data.
    """
    if d.n == 0:
        raise DataError("cannot build a rule list on an empty dataset")
    for r in rs.rules:
        if r.freq is None or r.err is None:
            raise ValueError("build_stel requires measured rules")
    is_cls = d.task == "classification"
    cands = [r for r in rs.rules if r.freq >= freq_threshold and not r.condition.is_empty()]
    masks = np.stack([condition_mask(r.condition, d) for r in cands], axis=0) \
        if cands else np.zeros((0, d.n), dtype=bool)
    if is_cls:
        out_codes = np.array([d.target.code(str(r.outcome)) for r in cands], dtype=np.int64)
        wrong = out_codes[:, None] != d.y[None, :] if cands else np.zeros((0, d.n), dtype=bool)

    remaining = np.ones(d.n, dtype=bool)
    chosen: list[Rule] = []
    n = d.n
    while True:
        left = int(remaining.sum())
        if left == 0:
            if is_cls:
                outcome, _, _ = _majority(d.y, d.target)
            else:
                outcome = float(np.mean(d.y))
            chosen.append(Rule(TRUE, outcome, freq=0.0, err=0.0))
            break
        # default rule on the remaining data
        if is_cls:
            def_outcome, def_code, counts = _majority(d.y[remaining], d.target)
            def_err = 1.0 - counts[def_code] / left
        else:
            def_outcome = float(np.mean(d.y[remaining]))
            def_err = float(np.var(d.y[remaining]))
        def_freq = left / n
        best_key = (def_err, -def_freq, 0, len(cands))
        best_idx = -1
        best_metrics = (def_freq, def_err)
        if len(cands):
            cover = masks & remaining
            cov_counts = cover.sum(axis=1)
            for j, r in enumerate(cands):
                cj = int(cov_counts[j])
                if cj == 0:
                    continue
                if is_cls:
                    err = float((cover[j] & wrong[j]).sum() / cj)
                else:
                    yj = d.y[cover[j]]
                    err = float(np.var(yj))
                key = (err, -(cj / n), r.length, j)
                if key < best_key:
                    best_key = key
                    best_idx = j
                    best_metrics = (cj / n, err)
        if best_idx < 0:
            chosen.append(Rule(TRUE, def_outcome, freq=def_freq, err=def_err))
            break
        r = cands[best_idx]
        chosen.append(Rule(r.condition, r.outcome,
                           freq=best_metrics[0], err=best_metrics[1]))
        remaining &= ~masks[best_idx]
    return RuleList(tuple(chosen), schema=d.schema, target=d.target)


def predict(rl: RuleList, x):
    """Outcome of the first rule whose condition the raw instance satisfies.

    Unknown categorical levels fail their terms, so such instances fall
    through to later rules and, at worst, the default.
    """
    for r in rl.rules:
        if satisfies(r.condition, x, rl.schema):
            return r.outcome
    raise AssertionError("default rule must match")  # unreachable


def predict_dataset(rl: RuleList, d: Dataset) -> np.ndarray:
    """Vectorized first-match prediction codes (or values) for a dataset."""
    masks = np.stack([condition_mask(r.condition, d) for r in rl.rules], axis=0)
    first = np.argmax(masks, axis=0)  # default row is all True
    if rl.task == "classification":
        codes = np.array([d.target.code(str(r.outcome)) for r in rl.rules])
        return codes[first]
    vals = np.array([float(r.outcome) for r in rl.rules])
    return vals[first]


def evaluate(rl: RuleList, d: Dataset) -> float:
    """Misclassification rate (classification) or MSE of predictions."""
    if d.n == 0:
        raise DataError("cannot evaluate on an empty dataset")
    pred = predict_dataset(rl, d)
    if rl.task == "classification":
        return float(np.mean(pred != d.y))
    return float(np.mean((pred - d.y) ** 2))


def write_stel_table(rl: RuleList, path, task=None) -> None:
    """CSV `position,len,freq,err,condition,pred`; the default prints TRUE."""
    task = task or rl.task
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(STEL_TABLE_HEADER + "\n")
        for pos, r in enumerate(rl.rules, start=1):
            pred = r.outcome if task == "classification" else format_number(r.outcome)
            fh.write(
                f"{pos},{r.length},{format_number(r.freq)},{format_number(r.err)},"
                f"{print_condition(r.condition, rl.schema)},{pred}\n"
            )


def read_stel_table(path, schema, target) -> RuleList:
    """Read a rule-list file written by write_stel_table."""
    task = "classification" if target.kind == CATEGORICAL else "regression"
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != STEL_TABLE_HEADER:
        raise DataError(f"{path}: missing rule-list header")
    rules = []
    for ln, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) < 6:
            raise DataError(f"{path}, line {ln}: expected 6 cells")
        cond_text = ",".join(cells[4:len(cells) - 1])
        try:
            pos = int(cells[0])
            length = int(cells[1])
            freq = float(cells[2])
            err = float(cells[3])
        except ValueError as exc:
            raise DataError(f"{path}, line {ln}: {exc}") from None
        if pos != ln - 1:
            raise DataError(f"{path}, line {ln}: positions must run 1..K in order")
        cond = parse_condition(cond_text, schema)
        if cond.length != length:
            raise DataError(f"{path}, line {ln}: len column mismatch")
        pred_s = cells[-1]
        if task == "classification":
            if pred_s not in target.levels:
                raise DataError(f"{path}, line {ln}: unknown outcome {pred_s!r}")
            outcome = pred_s
        else:
            outcome = float(pred_s)
        rules.append(Rule(cond, outcome, freq=freq, err=err))
    return RuleList(tuple(rules), schema=tuple(schema), target=target)
