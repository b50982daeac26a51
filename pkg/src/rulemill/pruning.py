"""Leave-one-out pruning of rule conditions via the decay criterion.

Removing the i-th variable-value pair changes the rule error from E0 to E-i;
the decay is the relative increase (E-i - E0) / max(E0, s) or, in absolute
mode, E-i - E0. Terms whose decay falls below the threshold are dropped,
walking the condition from its last term to its first.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .dataset import Dataset
from .rules import Condition, Rule, RuleSet, UncoveredCondition, condition_mask, measured

RELATIVE = "relative"
ABSOLUTE = "absolute"


@dataclass(frozen=True)
class PruneParams:
    """mode, decay threshold, denominator floor s, and the error metric.

    The default metric is the rule's training error on the pruning dataset
    (misclassification rate against the rule outcome, or the variance of the
    covered targets for regression). `error_metric(rule, dataset)` may
    substitute a validation or pessimistic error.
    """

    mode: str = RELATIVE
    threshold: float = 0.05
    s: float = 1e-6
    error_metric: Callable[[Rule, Dataset], float] | None = None

    def __post_init__(self):
        if self.mode not in (RELATIVE, ABSOLUTE):
            raise ValueError(f"unknown prune mode {self.mode!r}")
        if self.s <= 0:
            raise ValueError("s must be positive")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")


@dataclass(frozen=True)
class PruneStep:
    """One leave-one-out evaluation: the term considered, its decay, the verdict."""

    term: object
    decay: float
    removed: bool


def _default_error(r: Rule, d: Dataset) -> float:
    mask = condition_mask(r.condition, d)
    covered = int(mask.sum())
    if covered == 0:
        raise UncoveredCondition("condition covers no instance")
    if d.task == "classification":
        code = d.target.code(str(r.outcome))
        return float(np.mean(d.y[mask] != code))
    return float(np.var(d.y[mask]))


def _decay_value(e_minus: float, e0: float, p: PruneParams) -> float:
    if p.mode == RELATIVE:
        return (e_minus - e0) / max(e0, p.s)
    return e_minus - e0


def decay(r: Rule, i: int, d: Dataset, p: PruneParams = PruneParams()) -> float:
    """Decay of removing the i-th (1-based) variable-value pair of the rule."""
    k = r.length
    if k < 1:
        raise ValueError("decay needs a rule with at least one term")
    if not (1 <= i <= k):
        raise ValueError(f"term index {i} out of range 1..{k}")
    metric = p.error_metric or _default_error
    e0 = metric(r, d)
    terms = r.condition.terms
    reduced = Condition(terms[:i - 1] + terms[i:])
    e_minus = metric(replace(r, condition=reduced), d)
    return _decay_value(e_minus, e0, p)


def prune_rule_steps(r: Rule, d: Dataset,
                     p: PruneParams = PruneParams()) -> tuple[Rule, list[PruneStep]]:
    """Prune a rule and return it with the full decay log.

    Terms are considered from last to first; each decay is computed against
    the current (possibly already shortened) condition with the original
    outcome, and the error baseline moves to E-i after a removal. The final
    remaining term is never removed. Metrics are re-measured at the end.
    """
    if r.length < 1:
        raise ValueError("cannot prune a rule with an empty condition")
    metric = p.error_metric or _default_error
    terms = list(r.condition.terms)
    e0 = metric(replace(r, condition=Condition(tuple(terms))), d)
    log: list[PruneStep] = []
    for i in range(len(terms) - 1, -1, -1):
        if len(terms) == 1:
            break
        reduced = terms[:i] + terms[i + 1:]
        e_minus = metric(replace(r, condition=Condition(tuple(reduced))), d)
        dec = _decay_value(e_minus, e0, p)
        removed = dec < p.threshold
        log.append(PruneStep(terms[i], dec, removed))
        if removed:
            terms = reduced
            e0 = e_minus
    pruned = replace(r, condition=Condition(tuple(terms)))
    if p.error_metric is None:
        pruned = measured(pruned, d)
    return pruned, log


def prune_rule(r: Rule, d: Dataset, p: PruneParams = PruneParams()) -> Rule:
    """Leave-one-out pruning of one rule (see prune_rule_steps)."""
    pruned, _ = prune_rule_steps(r, d, p)
    return pruned


def prune_rules(rs: RuleSet, d: Dataset, p: PruneParams = PruneParams()) -> RuleSet:
    """Prune every rule of a set independently."""
    out = [prune_rule(r, d, p) if r.length >= 1 else r for r in rs.rules]
    return RuleSet(out, provenance={"source": "pruned"})
