"""Compact condition-subset selection on the binary indicator matrix.

Conditions become binary indicator features (1 iff an instance satisfies the
condition); a regularized forest grown over those features greedily admits
features into its shared used-set, and that set is the selection. Penalties
shrink with condition length (and optionally grow with importance), so
shorter, informative conditions are preferred.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dataset import NUMERIC, ColumnSchema, Dataset
from .rules import Condition, condition_mask
from .trees import Ensemble, ForestParams, build_forest, importance

_LAMBDA_FLOOR = 1e-6


@dataclass(frozen=True)
class SelectionParams:
    """Base coefficient, length and importance weights, guided-forest setup.

    lambda_j = lambda0 * (1 - gamma * l_j / l*)              (beta = 0)
    lambda_j = lambda0 * (1 - gamma * l_j / l* + beta * imp_j) otherwise,
    clamped into (0, 1]. `forest.mtry = None` means the guided build
    considers every indicator feature at each node.
    """

    lambda0: float = 1.0
    gamma: float = 0.1
    beta: float = 0.0
    rescore: bool = True
    forest: ForestParams = field(default_factory=lambda: ForestParams(n_trees=100))

    def __post_init__(self):
        if not (0.0 < self.lambda0 <= 1.0):
            raise ValueError("lambda0 must lie in (0, 1]")
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError("gamma must lie in [0, 1]")
        if not (0.0 <= self.beta <= 1.0):
            raise ValueError("beta must lie in [0, 1]")


@dataclass(frozen=True)
class IndicatorDataset:
    """Binary instance-by-condition satisfaction matrix plus the target."""

    matrix: np.ndarray  # (n, J) of 0/1
    conditions: tuple[Condition, ...]
    target: ColumnSchema
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_conditions(self) -> int:
        return self.matrix.shape[1]

    def to_dataset(self, columns=None) -> Dataset:
        """View as a Dataset of numeric 0/1 predictors (optionally a subset)."""
        cols = range(self.n_conditions) if columns is None else columns
        return Dataset(
            schema=tuple(ColumnSchema(f"I{j + 1}", NUMERIC) for j in cols),
            target=self.target,
            columns=tuple(self.matrix[:, j].astype(np.float64) for j in cols),
            y=self.y,
        )


def indicator_matrix(conds, d: Dataset) -> IndicatorDataset:
    """Exact satisfaction matrix; column order follows the condition order."""
    conds = tuple(conds)
    if d.n == 0:
        raise ValueError("indicator_matrix needs a nonempty dataset")
    mat = np.zeros((d.n, len(conds)), dtype=np.uint8)
    for j, c in enumerate(conds):
        mat[:, j] = condition_mask(c, d)
    return IndicatorDataset(matrix=mat, conditions=conds, target=d.target, y=d.y)


def complexity_lambdas(conds, params: SelectionParams,
                       importances=None) -> np.ndarray:
    """Per-condition penalty coefficients from length (and importance)."""
    lengths = np.array([c.length for c in conds], dtype=np.float64)
    if len(lengths) == 0:
        raise ValueError("no conditions")
    l_star = lengths.max()
    if l_star < 1:
        raise ValueError("maximum condition length must be >= 1")
    lam = params.lambda0 * (1.0 - params.gamma * lengths / l_star)
    if params.beta > 0.0:
        if importances is None:
            raise ValueError("beta > 0 requires importance scores")
        imp = np.asarray(importances, dtype=np.float64)
        if imp.shape != lengths.shape:
            raise ValueError("importances must align with conditions")
        if imp.min() < 0.0 or imp.max() > 1.0:
            raise ValueError("importances must be normalized to [0, 1]")
        lam = params.lambda0 * (1.0 - params.gamma * lengths / l_star + params.beta * imp)
    return np.clip(lam, _LAMBDA_FLOOR, 1.0)


@dataclass(frozen=True)
class SelectionResult:
    conditions: tuple[Condition, ...]  # ordered by score descending
    scores: np.ndarray
    indices: tuple[int, ...]  # positions in the input condition list
    seed: int


def _used_features(e: Ensemble) -> list[int]:
    used = set()
    for t in e.trees:
        used.update(int(v) - 1 for v in t.split_var[t.split_var > 0])
    return sorted(used)


def select_conditions(conds, d: Dataset, params: SelectionParams = SelectionParams()
                      ) -> SelectionResult:
    """Select a relevant, non-redundant condition subset via a guided build.

    Constant indicator columns are excluded up front. When beta > 0, global
    importances come from an ordinary forest on the indicator data. The
    selected set is every feature the regularized build admitted; scores are
    re-computed by an ordinary forest restricted to the selected features
    when rescoring is on, otherwise taken from the guided build's gains.
    """
    conds = list(conds)
    if not conds:
        raise ValueError("select_conditions needs at least one condition")
    ind = indicator_matrix(conds, d)
    sums = ind.matrix.sum(axis=0)
    keep = [j for j in range(ind.n_conditions) if 0 < sums[j] < ind.n]
    if not keep:
        return SelectionResult((), np.zeros(0), (), params.forest.seed)
    data = ind.to_dataset(keep)

    imp = None
    if params.beta > 0.0:
        plain = build_forest(data, ForestParams(
            n_trees=params.forest.n_trees, seed=params.forest.seed,
            min_leaf=params.forest.min_leaf))
        imp = importance(plain)
    lam = complexity_lambdas([conds[j] for j in keep], params, imp)

    mtry = params.forest.mtry if params.forest.mtry is not None else data.p
    guided = build_forest(data, ForestParams(
        n_trees=params.forest.n_trees, mtry=mtry, min_leaf=params.forest.min_leaf,
        max_nodes=params.forest.max_nodes, seed=params.forest.seed,
        regularization=tuple(lam)))
    selected = _used_features(guided)
    if not selected:
        return SelectionResult((), np.zeros(0), (), params.forest.seed)

    if params.rescore:
        restricted = Dataset(
            schema=tuple(data.schema[j] for j in selected),
            target=data.target,
            columns=tuple(data.columns[j] for j in selected),
            y=data.y,
        )
        rescored = build_forest(restricted, ForestParams(
            n_trees=params.forest.n_trees, seed=params.forest.seed,
            min_leaf=params.forest.min_leaf))
        scores = importance(rescored)
    else:
        scores = importance(guided)[selected]

    order = np.argsort(-scores, kind="stable")
    indices = tuple(keep[selected[int(i)]] for i in order)
    return SelectionResult(
        conditions=tuple(conds[i] for i in indices),
        scores=scores[order],
        indices=indices,
        seed=params.forest.seed,
    )
