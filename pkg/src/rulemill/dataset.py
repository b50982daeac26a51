"""Column-typed tabular data: CSV loading, target discretization, splits, synthesis.

Numeric columns are stored as float64 arrays; categorical columns as integer
codes into a per-column level list kept in first-appearance order. Datasets
are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"

# characters forbidden inside categorical level tokens (CSV is unquoted)
_FORBIDDEN_CHARS = set(',{}"\'') | set(" \t\r\n\v\f")

BUNDLED = ("iris", "tictactoe", "breast")


class DataError(ValueError):
    """Malformed input data or a schema violation."""


def _check_token(token: str, column: str) -> None:
    if not token:
        raise DataError(f"column {column!r}: empty level token")
    if any(c in _FORBIDDEN_CHARS for c in token):
        raise DataError(
            f"column {column!r}: level token {token!r} contains whitespace, "
            "comma, brace, or quote characters"
        )


@dataclass(frozen=True)
class ColumnSchema:
    """Name, kind, and (for categorical columns) ordered level tokens."""

    name: str
    kind: str
    levels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise DataError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == CATEGORICAL:
            if not self.levels:
                raise DataError(f"column {self.name!r}: categorical column needs levels")
            if len(set(self.levels)) != len(self.levels):
                raise DataError(f"column {self.name!r}: duplicate levels")
            for tok in self.levels:
                _check_token(tok, self.name)
        elif self.levels:
            raise DataError(f"column {self.name!r}: numeric column cannot carry levels")

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def code(self, token: str) -> int:
        """Level code of `token`, or -1 if the token is not a known level."""
        try:
            return self.levels.index(token)
        except ValueError:
            return -1


@dataclass(frozen=True)
class Dataset:
    """n instances of p typed predictor columns plus one target column."""

    schema: tuple[ColumnSchema, ...]
    target: ColumnSchema
    columns: tuple[np.ndarray, ...]
    y: np.ndarray

    def __post_init__(self):
        if len(self.columns) != len(self.schema):
            raise DataError("number of data columns does not match schema")
        n = len(self.y)
        for cs, col in zip(self.schema, self.columns):
            if len(col) != n:
                raise DataError(f"column {cs.name!r}: {len(col)} cells for {n} rows")
            if cs.kind == NUMERIC:
                if not np.all(np.isfinite(col)):
                    raise DataError(f"column {cs.name!r}: non-finite numeric value")
            else:
                if col.size and (col.min() < 0 or col.max() >= cs.n_levels):
                    raise DataError(f"column {cs.name!r}: level code out of range")
        if self.target.kind == CATEGORICAL:
            if self.y.size and (self.y.min() < 0 or self.y.max() >= self.target.n_levels):
                raise DataError("target: level code out of range")
        elif not np.all(np.isfinite(self.y)):
            raise DataError("target: non-finite numeric value")

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return len(self.schema)

    @property
    def task(self) -> str:
        return "classification" if self.target.kind == CATEGORICAL else "regression"

    def take(self, indices) -> "Dataset":
        """New dataset holding the rows at `indices` (in the given order)."""
        idx = np.asarray(indices)
        return Dataset(
            schema=self.schema,
            target=self.target,
            columns=tuple(c[idx] for c in self.columns),
            y=self.y[idx],
        )

    def row(self, i: int) -> tuple:
        """Predictor values of row i, decoded (tokens for categorical cells)."""
        out = []
        for cs, col in zip(self.schema, self.columns):
            if cs.kind == NUMERIC:
                out.append(float(col[i]))
            else:
                out.append(cs.levels[int(col[i])])
        return tuple(out)

    def target_value(self, i: int):
        if self.target.kind == CATEGORICAL:
            return self.target.levels[int(self.y[i])]
        return float(self.y[i])


def _parse_number(cell: str):
    try:
        v = float(cell)
    except ValueError:
        return None
    return v


def _build_dataset(names, raw_columns, line_numbers, schema_hint, target_name):
    """Infer column kinds and encode raw string columns into a Dataset."""
    hint = dict(schema_hint or {})
    for key in hint:
        if key not in names:
            raise DataError(f"schema hint names unknown column {key!r}")
        if hint[key] not in (NUMERIC, CATEGORICAL):
            raise DataError(f"schema hint for {key!r}: unknown kind {hint[key]!r}")

    if target_name is None:
        target_idx = len(names) - 1
    else:
        if target_name not in names:
            raise DataError(f"target column {target_name!r} not in header")
        target_idx = names.index(target_name)

    def encode(name, cells):
        parsed = [_parse_number(c) for c in cells]
        kind = hint.get(name)
        if kind is None:
            kind = NUMERIC if all(v is not None for v in parsed) else CATEGORICAL
        if kind == NUMERIC:
            for v, c, ln in zip(parsed, cells, line_numbers):
                if v is None:
                    raise DataError(f"column {name!r}, line {ln}: {c!r} is not a number")
                if not math.isfinite(v):
                    raise DataError(f"column {name!r}, line {ln}: non-finite value {c!r}")
            return ColumnSchema(name, NUMERIC), np.array(parsed, dtype=np.float64)
        levels: dict[str, int] = {}
        codes = np.empty(len(cells), dtype=np.int64)
        for i, tok in enumerate(cells):
            _check_token(tok, name)
            if tok not in levels:
                levels[tok] = len(levels)
            codes[i] = levels[tok]
        return ColumnSchema(name, CATEGORICAL, tuple(levels)), codes

    encoded = [encode(nm, col) for nm, col in zip(names, raw_columns)]
    target_schema, y = encoded[target_idx]
    schema = tuple(cs for i, (cs, _) in enumerate(encoded) if i != target_idx)
    columns = tuple(col for i, (_, col) in enumerate(encoded) if i != target_idx)
    return Dataset(schema=schema, target=target_schema, columns=columns, y=y)


def load_csv(path, schema_hint=None, target=None) -> Dataset:
    """Load a dataset from an unquoted, comma-separated file with a header row.

    The last column is the target unless `target` names another column.
    Column kinds are inferred (every cell parseable as a number -> numeric,
    otherwise categorical); `schema_hint` maps column names to explicit kinds.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError(f"{path}: empty file")
    names = lines[0].split(",")
    if len(names) < 2:
        raise DataError(f"{path}: need at least one predictor and a target column")
    if len(set(names)) != len(names):
        raise DataError(f"{path}: duplicate column names in header")
    ncol = len(names)
    raw_columns = [[] for _ in range(ncol)]
    line_numbers = []
    for ln, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != ncol:
            raise DataError(f"{path}, line {ln}: expected {ncol} cells, got {len(cells)}")
        for cell in cells:
            if cell == "":
                raise DataError(f"{path}, line {ln}: empty cell (missing values unsupported)")
        for j, cell in enumerate(cells):
            raw_columns[j].append(cell)
        line_numbers.append(ln)
    if not line_numbers:
        raise DataError(f"{path}: no data rows")
    return _build_dataset(names, raw_columns, line_numbers, schema_hint, target)


def write_csv(d: Dataset, path) -> None:
    """Write a dataset in the same unquoted CSV format load_csv reads."""

    def fmt(cs, v):
        return cs.levels[int(v)] if cs.kind == CATEGORICAL else repr(float(v))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join([cs.name for cs in d.schema] + [d.target.name]) + "\n")
        for i in range(d.n):
            cells = [fmt(cs, col[i]) for cs, col in zip(d.schema, d.columns)]
            cells.append(fmt(d.target, d.y[i]))
            fh.write(",".join(cells) + "\n")


def discretize_target(d: Dataset, bins: int) -> Dataset:
    """Replace a numeric target with an equal-frequency categorical version.

    Cut points sit on observed values; rows with a value equal to a cut fall
    into the lower bin. Bin labels are "L1".."L<bins>" in increasing value
    order and every bin is non-empty.
    """
    if d.target.kind != NUMERIC:
        raise DataError("discretize_target: target is not numeric")
    if bins < 2:
        raise DataError("discretize_target: bins must be >= 2")
    if d.n < bins:
        raise DataError("discretize_target: fewer rows than bins")
    distinct, counts = np.unique(d.y, return_counts=True)
    m = len(distinct)
    if bins > m:
        raise DataError(
            f"discretize_target: {bins} bins > {m} distinct target values"
        )
    cum = np.cumsum(counts)
    cuts = []
    j = 0
    for k in range(1, bins):
        boundary = k * d.n / bins
        # advance to the first distinct value reaching the quantile boundary,
        # but leave enough distinct values for the remaining bins
        while cum[j] < boundary and (m - (j + 1)) > (bins - k):
            j += 1
        j = min(j, m - (bins - k) - 1)
        cuts.append(distinct[j])
        j += 1
    codes = np.searchsorted(np.asarray(cuts), d.y, side="left")
    labels = tuple(f"L{i}" for i in range(1, bins + 1))
    return Dataset(
        schema=d.schema,
        target=ColumnSchema(d.target.name, CATEGORICAL, labels),
        columns=d.columns,
        y=codes.astype(np.int64),
    )


def split(d: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Disjoint train/test partition; train size = round(train_fraction * n)."""
    if not (0.0 < train_fraction < 1.0):
        raise DataError("split: train_fraction must lie in (0, 1)")
    if d.n < 2:
        raise DataError("split: need at least 2 rows")
    size = int(math.floor(train_fraction * d.n + 0.5))
    perm = np.random.default_rng(seed).permutation(d.n)
    train_idx = np.sort(perm[:size])
    test_idx = np.sort(perm[size:])
    return d.take(train_idx), d.take(test_idx)


def generate_team_data(n: int, p: int, active: int, seed: int) -> Dataset:
    """Synthetic team-selection data: p binary players, `active` play per row.

    Each row assigns level "Y" to exactly `active` uniformly chosen predictors
    and "N" to the rest; the target is "win" iff exactly one of X1, X2 is "Y",
    else "lose".
    """
    if p < 2:
        raise DataError("generate_team_data: p must be >= 2")
    if active > p:
        raise DataError("generate_team_data: active must be <= p")
    if n < 1:
        raise DataError("generate_team_data: n must be >= 1")
    rng = np.random.default_rng(seed)
    grid = np.zeros((n, p), dtype=bool)
    for i in range(n):
        grid[i, rng.choice(p, size=active, replace=False)] = True
    win = grid[:, 0] ^ grid[:, 1]
    names = [f"X{j}" for j in range(1, p + 1)]
    raw_columns = [["Y" if grid[i, j] else "N" for i in range(n)] for j in range(p)]
    raw_columns.append(["win" if w else "lose" for w in win])
    return _build_dataset(names + ["T"], raw_columns, list(range(2, n + 2)), None, None)


def load_bundled(name: str) -> Dataset:
    """Load one of the packaged benchmark datasets: iris, tictactoe, breast."""
    if name not in BUNDLED:
        raise DataError(f"unknown bundled dataset {name!r}; choose from {BUNDLED}")
    ref = resources.files("rulemill").joinpath("data", f"{name}.csv")
    with resources.as_file(ref) as path:
        return load_csv(path)
