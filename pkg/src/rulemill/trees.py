"""CART-style binary trees, random forests, regularized forests, node tables.

Trees are stored flat: one row per node with 1-based ids, children ids strictly
greater than the parent id, status -1 for leaves. Numeric splits send a value
left iff value <= split_point; categorical splits store a level-subset bitmask
in split_point and send a row left iff the bit of its level code is set.
Ensembles are immutable once built.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .dataset import CATEGORICAL, NUMERIC, ColumnSchema, DataError, Dataset

_GAIN_TOL = 1e-12
_MAX_CAT_LEVELS = 32
_EXHAUSTIVE_CAT_LEVELS = 10

NODE_TABLE_HEADER = "tree_id,node,left,right,split_var,split_point,status,pred"


class TreeError(ValueError):
    """Invalid tree structure or parameters."""


@dataclass(frozen=True)
class ForestParams:
    """Parameters for build_forest / build_cart.

    mtry and min_leaf default to the usual task-dependent heuristics
    (sqrt(p) / 1 for classification, p/3 / 5 for regression). When
    `regularization` supplies per-feature penalties in (0, 1], the gain of a
    feature outside the shared used-feature set is multiplied by its penalty
    and the set grows whenever a penalized feature is chosen.
    """

    n_trees: int = 100
    mtry: int | None = None
    min_leaf: int | None = None
    max_nodes: int | None = None
    seed: int = 0
    regularization: tuple[float, ...] | None = None


@dataclass
class NodeTable:
    """Flat array encoding of one binary decision tree (ids are 1-based)."""

    left: np.ndarray
    right: np.ndarray
    split_var: np.ndarray  # 1-based feature index, 0 on leaves
    split_point: np.ndarray
    status: np.ndarray  # -1 leaf, 1 internal
    pred: list  # leaf outcome (token or float), None on internal nodes

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def is_leaf(self, node_id: int) -> bool:
        return self.status[node_id - 1] == -1

    def validate(self, schema, task, tree_id=1):
        """Check structural invariants, naming the offending tree and node."""

        def bad(node_id, msg):
            raise TreeError(f"tree {tree_id}, node {node_id}: {msg}")

        k = self.n_nodes
        if k == 0:
            raise TreeError(f"tree {tree_id}: empty node table")
        parents = np.zeros(k + 1, dtype=np.int64)
        for i in range(k):
            nid = i + 1
            st = int(self.status[i])
            l, r, v = int(self.left[i]), int(self.right[i]), int(self.split_var[i])
            if st == -1:
                if l or r or v or self.split_point[i]:
                    bad(nid, "leaf must have zero children and split fields")
                if self.pred[i] is None:
                    bad(nid, "leaf without a prediction")
            elif st == 1:
                if not (l and r):
                    bad(nid, "internal node must have two children")
                for c in (l, r):
                    if not (nid < c <= k):
                        bad(nid, f"child id {c} not greater than parent or out of range")
                    parents[c] += 1
                if not (1 <= v <= len(schema)):
                    bad(nid, f"split_var {v} out of range")
                cs = schema[v - 1]
                if cs.kind == CATEGORICAL:
                    pt = float(self.split_point[i])
                    if pt != int(pt):
                        bad(nid, "categorical split_point must be an integer bitmask")
                    mask = int(pt)
                    full = (1 << cs.n_levels) - 1
                    if mask <= 0 or mask >= full:
                        bad(nid, "categorical bitmask empty or covering all levels")
                if self.pred[i] is not None:
                    bad(nid, "internal node carries a prediction")
            else:
                bad(nid, f"status must be -1 or 1, got {st}")
        if parents[1] != 0:
            raise TreeError(f"tree {tree_id}, node 1: root cannot have a parent")
        for nid in range(2, k + 1):
            if parents[nid] != 1:
                bad(nid, f"expected exactly one parent, found {parents[nid]}")


@dataclass
class Ensemble:
    """A list of node tables plus the schema they were built against."""

    trees: list[NodeTable]
    schema: tuple[ColumnSchema, ...]
    target: ColumnSchema
    task: str
    inbag: list[np.ndarray] | None = None
    feature_gains: np.ndarray | None = None
    params: ForestParams | None = None

    @property
    def n_trees(self) -> int:
        return len(self.trees)


def _resolve_params(d: Dataset, params: ForestParams):
    task = d.task
    mtry = params.mtry
    if mtry is None:
        mtry = max(1, int(math.sqrt(d.p))) if task == "classification" else max(1, d.p // 3)
    if not (1 <= mtry <= d.p):
        raise TreeError(f"mtry {mtry} out of range [1, {d.p}]")
    min_leaf = params.min_leaf
    if min_leaf is None:
        min_leaf = 1 if task == "classification" else 5
    if min_leaf < 1:
        raise TreeError("min_leaf must be >= 1")
    if params.max_nodes is not None and params.max_nodes < 1:
        raise TreeError("max_nodes must be >= 1")
    lambdas = None
    if params.regularization is not None:
        lambdas = np.asarray(params.regularization, dtype=np.float64)
        if lambdas.shape != (d.p,):
            raise TreeError(f"regularization needs {d.p} coefficients")
        if np.any(lambdas <= 0) or np.any(lambdas > 1):
            raise TreeError("penalty coefficients must lie in (0, 1]")
    return task, mtry, min_leaf, params.max_nodes, lambdas


def _gini(counts, total):
    return 1.0 - np.sum((counts / total) ** 2)


def _numeric_split(values, y, is_classification, n_classes, min_leaf):
    """Best (gain, threshold) for one numeric feature, or None."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    m = len(v)
    cand = np.nonzero(v[:-1] < v[1:])[0]
    if cand.size == 0:
        return None
    sizes = cand + 1
    ok = (sizes >= min_leaf) & (m - sizes >= min_leaf)
    if not ok.any():
        return None
    cand, sizes = cand[ok], sizes[ok]
    if is_classification:
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), y[order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        left = cum[cand]
        total = cum[-1]
        right = total - left
        parent = _gini(total, m)
        gl = 1.0 - np.sum((left / sizes[:, None]) ** 2, axis=1)
        gr = 1.0 - np.sum((right / (m - sizes)[:, None]) ** 2, axis=1)
        gains = parent - (sizes / m) * gl - ((m - sizes) / m) * gr
    else:
        ys = y[order].astype(np.float64)
        cs, cs2 = np.cumsum(ys), np.cumsum(ys * ys)
        sl, sl2 = cs[cand], cs2[cand]
        sr, sr2 = cs[-1] - sl, cs2[-1] - sl2
        nl, nr = sizes, m - sizes
        var_l = sl2 / nl - (sl / nl) ** 2
        var_r = sr2 / nr - (sr / nr) ** 2
        var_p = cs2[-1] / m - (cs[-1] / m) ** 2
        gains = var_p - (nl / m) * var_l - (nr / m) * var_r
    best = int(np.argmax(gains))  # first max: smallest threshold wins ties
    return float(gains[best]), float((v[cand[best]] + v[cand[best] + 1]) / 2.0)


def _categorical_split(codes, n_levels, y, is_classification, n_classes, min_leaf):
    """Best (gain, bitmask) for one categorical feature, or None.

    Subsets are enumerated exhaustively for few present levels; beyond that,
    levels are ordered by class share (or target mean) and only ordered
    prefix cuts are tried. Levels absent from the node route right.
    """
    m = len(codes)
    present = np.unique(codes)
    if present.size < 2:
        return None
    if is_classification:
        counts = np.zeros((n_levels, n_classes))
        np.add.at(counts, (codes, y), 1.0)
        total = counts.sum(axis=0)
        parent = _gini(total, m)
    else:
        yf = y.astype(np.float64)
        s = np.zeros(n_levels)
        s2 = np.zeros(n_levels)
        c = np.zeros(n_levels)
        np.add.at(s, codes, yf)
        np.add.at(s2, codes, yf * yf)
        np.add.at(c, codes, 1.0)
        var_p = s2.sum() / m - (s.sum() / m) ** 2

    if present.size <= _EXHAUSTIVE_CAT_LEVELS:
        rest = present[1:]
        subsets = []
        for bits in range(1 << len(rest)):
            sel = [int(present[0])]
            sel += [int(rest[i]) for i in range(len(rest)) if bits >> i & 1]
            subsets.append(sel)
    else:
        if is_classification:
            share = counts[present, 0] / counts[present].sum(axis=1)
        else:
            share = s[present] / c[present]
        ordered = present[np.argsort(share, kind="stable")]
        subsets = [[int(l) for l in ordered[:j]] for j in range(1, len(ordered))]

    best_gain, best_mask = -1.0, 0
    for sel in subsets:
        mask = 0
        for lvl in sel:
            mask |= 1 << lvl
        if is_classification:
            left = counts[sel].sum(axis=0)
            nl = left.sum()
            nr = m - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            right = total - left
            gain = parent - (nl / m) * _gini(left, nl) - (nr / m) * _gini(right, nr)
        else:
            nl = c[sel].sum()
            nr = m - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            sl, sl2 = s[sel].sum(), s2[sel].sum()
            sr, sr2 = s.sum() - sl, s2.sum() - sl2
            var_l = sl2 / nl - (sl / nl) ** 2
            var_r = sr2 / nr - (sr / nr) ** 2
            gain = var_p - (nl / m) * var_l - (nr / m) * var_r
        if gain > best_gain or (gain == best_gain and mask < best_mask):
            best_gain, best_mask = gain, mask
    if best_mask == 0:
        return None
    return float(best_gain), float(best_mask)


def _binary_splits_all(X01, y, is_classification, n_classes, min_leaf):
    """Gains of the 0/1-threshold split for every column of a binary matrix."""
    m, J = X01.shape
    if is_classification:
        onehot = np.zeros((m, n_classes))
        onehot[np.arange(m), y] = 1.0
        right = onehot.T @ X01  # class counts on the value-1 side
        total = onehot.sum(axis=0)
        left = total[:, None] - right
        nr = X01.sum(axis=0)
        nl = m - nr
        valid = (nl >= min_leaf) & (nr >= min_leaf)
        with np.errstate(invalid="ignore", divide="ignore"):
            gl = 1.0 - np.sum((left / np.where(nl > 0, nl, 1)) ** 2, axis=0)
            gr = 1.0 - np.sum((right / np.where(nr > 0, nr, 1)) ** 2, axis=0)
        parent = _gini(total, m)
        gains = parent - (nl / m) * gl - (nr / m) * gr
    else:
        yf = y.astype(np.float64)
        sr = yf @ X01
        sr2 = (yf * yf) @ X01
        nr = X01.sum(axis=0)
        nl = m - nr
        sl = yf.sum() - sr
        sl2 = (yf * yf).sum() - sr2
        valid = (nl >= min_leaf) & (nr >= min_leaf)
        with np.errstate(invalid="ignore", divide="ignore"):
            var_l = sl2 / np.where(nl > 0, nl, 1) - (sl / np.where(nl > 0, nl, 1)) ** 2
            var_r = sr2 / np.where(nr > 0, nr, 1) - (sr / np.where(nr > 0, nr, 1)) ** 2
        var_p = (yf * yf).mean() - yf.mean() ** 2
        gains = var_p - (nl / m) * var_l - (nr / m) * var_r
    gains = np.where(valid, gains, -np.inf)
    return gains


def _leaf_value(y, task, target):
    if task == "classification":
        counts = np.bincount(y, minlength=target.n_levels)
        return target.levels[int(np.argmax(counts))]
    return float(np.mean(y))


def _grow_tree(d, rows, *, task, mtry, min_leaf, max_nodes, rng, lambdas, used,
               gain_acc, n_train, binary_cols):
    """Grow one tree on the rows, returning a NodeTable.

    Nodes are allocated breadth-first so ids read level by level; the shared
    `used` feature set implements regularized-forest semantics.
    """
    is_cls = task == "classification"
    n_classes = d.target.n_levels if is_cls else 0
    p = d.p
    left, right = [0], [0]
    split_var, split_point = [0], [0.0]
    status, preds = [-1], [None]
    queue = deque([(0, rows)])
    while queue:
        slot, idx = queue.popleft()
        yn = d.y[idx]
        m = len(idx)
        make_leaf = True
        chosen = None
        pure = (yn == yn[0]).all() if is_cls else (np.ptp(yn) == 0.0 if m else True)
        budget_ok = max_nodes is None or len(left) + 2 <= max_nodes
        if not pure and m >= 2 * min_leaf and budget_ok:
            if mtry < p:
                feats = np.sort(rng.choice(p, size=mtry, replace=False))
            else:
                feats = np.arange(p)
            if binary_cols is not None and binary_cols[feats].all():
                X01 = np.stack([d.columns[f][idx] for f in feats], axis=1)
                gains = _binary_splits_all(X01, yn, is_cls, n_classes, min_leaf)
                eff = gains.copy()
                if lambdas is not None:
                    for k, f in enumerate(feats):
                        if f not in used:
                            eff[k] *= lambdas[f]
                k = int(np.argmax(eff))
                if np.isfinite(gains[k]) and gains[k] > _GAIN_TOL:
                    chosen = (int(feats[k]), 0.5, float(gains[k]))
            else:
                best_eff = -1.0
                for f in feats:
                    cs = d.schema[f]
                    col = d.columns[f][idx]
                    if cs.kind == NUMERIC:
                        res = _numeric_split(col, yn, is_cls, n_classes, min_leaf)
                    else:
                        res = _categorical_split(
                            col, cs.n_levels, yn, is_cls, n_classes, min_leaf
                        )
                    if res is None:
                        continue
                    gain, point = res
                    eff = gain
                    if lambdas is not None and f not in used:
                        eff = gain * lambdas[f]
                    if eff > best_eff + _GAIN_TOL and gain > _GAIN_TOL:
                        best_eff = eff
                        chosen = (int(f), point, gain)
        if chosen is not None:
            f, point, gain = chosen
            cs = d.schema[f]
            col = d.columns[f][idx]
            if cs.kind == NUMERIC:
                go_left = col <= point
            else:
                go_left = (int(point) >> col.astype(np.int64)) & 1 == 1
            li, ri = idx[go_left], idx[~go_left]
            if len(li) and len(ri):
                make_leaf = False
                gain_acc[f] += (m / n_train) * gain
                if lambdas is not None:
                    used.add(f)
                lslot, rslot = len(left), len(left) + 1
                for _ in range(2):
                    left.append(0)
                    right.append(0)
                    split_var.append(0)
                    split_point.append(0.0)
                    status.append(-1)
                    preds.append(None)
                left[slot], right[slot] = lslot + 1, rslot + 1
                split_var[slot] = f + 1
                split_point[slot] = float(point)
                status[slot] = 1
                queue.append((lslot, li))
                queue.append((rslot, ri))
        if make_leaf:
            status[slot] = -1
            preds[slot] = _leaf_value(yn, task, d.target)
    return NodeTable(
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        split_var=np.asarray(split_var, dtype=np.int64),
        split_point=np.asarray(split_point, dtype=np.float64),
        status=np.asarray(status, dtype=np.int64),
        pred=preds,
    )


def _binary_flags(d: Dataset):
    flags = np.zeros(d.p, dtype=bool)
    for j, cs in enumerate(d.schema):
        if cs.kind == NUMERIC:
            col = d.columns[j]
            flags[j] = bool(np.all((col == 0.0) | (col == 1.0)))
    return flags


def build_forest(d: Dataset, params: ForestParams) -> Ensemble:
    """Grow a (possibly regularized) random forest on bootstrap samples.

    Deterministic given params.seed. With regularization the shared
    used-feature set serializes tree construction order; trees of an
    unregularized build are independent.
    """
    if d.n < 1:
        raise TreeError("cannot train on an empty dataset")
    if params.n_trees < 1:
        raise TreeError("n_trees must be >= 1")
    for cs in d.schema:
        if cs.kind == CATEGORICAL and cs.n_levels > _MAX_CAT_LEVELS:
            raise TreeError(f"column {cs.name!r}: more than {_MAX_CAT_LEVELS} levels")
    task, mtry, min_leaf, max_nodes, lambdas = _resolve_params(d, params)
    rng = np.random.default_rng(params.seed)
    used: set[int] = set()
    gain_acc = np.zeros(d.p)
    binary_cols = _binary_flags(d)
    trees, inbag = [], []
    for _ in range(params.n_trees):
        idx = rng.integers(0, d.n, size=d.n)
        trees.append(
            _grow_tree(
                d, idx, task=task, mtry=mtry, min_leaf=min_leaf,
                max_nodes=max_nodes, rng=rng, lambdas=lambdas, used=used,
                gain_acc=gain_acc, n_train=d.n, binary_cols=binary_cols,
            )
        )
        inbag.append(idx)
    return Ensemble(
        trees=trees, schema=d.schema, target=d.target, task=task,
        inbag=inbag, feature_gains=gain_acc, params=params,
    )


def build_cart(d: Dataset, min_leaf: int | None = None, max_nodes: int | None = None,
               seed: int = 0) -> Ensemble:
    """Grow a single CART tree on the full data (no bootstrap, all features)."""
    if d.n < 1:
        raise TreeError("cannot train on an empty dataset")
    params = ForestParams(n_trees=1, mtry=d.p, min_leaf=min_leaf,
                          max_nodes=max_nodes, seed=seed)
    task, mtry, min_leaf_r, max_nodes_r, _ = _resolve_params(d, params)
    gain_acc = np.zeros(d.p)
    tree = _grow_tree(
        d, np.arange(d.n), task=task, mtry=mtry, min_leaf=min_leaf_r,
        max_nodes=max_nodes_r, rng=np.random.default_rng(seed), lambdas=None,
        used=set(), gain_acc=gain_acc, n_train=d.n, binary_cols=_binary_flags(d),
    )
    return Ensemble(
        trees=[tree], schema=d.schema, target=d.target, task=task,
        inbag=None, feature_gains=gain_acc, params=params,
    )


def _encode_instance(x, schema):
    if len(x) != len(schema):
        raise DataError(f"instance has {len(x)} values for {len(schema)} predictors")
    enc = []
    for v, cs in zip(x, schema):
        if cs.kind == NUMERIC:
            enc.append(float(v))
        else:
            code = cs.code(str(v))
            if code < 0:
                raise DataError(f"column {cs.name!r}: unknown level {v!r}")
            enc.append(code)
    return enc


def route(t: NodeTable, x, schema) -> tuple[int, object]:
    """Route one instance (raw predictor values) to (leaf_id, prediction)."""
    enc = _encode_instance(x, schema)
    nid = 1
    while t.status[nid - 1] == 1:
        i = nid - 1
        f = int(t.split_var[i]) - 1
        if schema[f].kind == NUMERIC:
            go_left = enc[f] <= t.split_point[i]
        else:
            go_left = (int(t.split_point[i]) >> enc[f]) & 1 == 1
        nid = int(t.left[i]) if go_left else int(t.right[i])
    return nid, t.pred[nid - 1]


def route_rows(t: NodeTable, d: Dataset, rows=None) -> np.ndarray:
    """Leaf ids (1-based) for dataset rows, vectorized frontier descent."""
    idx = np.arange(d.n) if rows is None else np.asarray(rows)
    node = np.ones(len(idx), dtype=np.int64)
    while True:
        internal = t.status[node - 1] == 1
        if not internal.any():
            return node
        for nid in np.unique(node[internal]):
            i = int(nid) - 1
            sel = internal & (node == nid)
            f = int(t.split_var[i]) - 1
            col = d.columns[f][idx[sel]]
            if d.schema[f].kind == NUMERIC:
                go_left = col <= t.split_point[i]
            else:
                go_left = (int(t.split_point[i]) >> col.astype(np.int64)) & 1 == 1
            node[sel] = np.where(go_left, t.left[i], t.right[i])


def _pred_codes(t: NodeTable, target: ColumnSchema, task):
    """Per-node predictions as level codes (classification) or floats."""
    if task == "classification":
        lut = {tok: i for i, tok in enumerate(target.levels)}
        return np.array([lut[p] if p is not None else -1 for p in t.pred], dtype=np.int64)
    return np.array([p if p is not None else np.nan for p in t.pred], dtype=np.float64)


def oob_error(e: Ensemble, d: Dataset) -> float:
    """Out-of-bag error: majority vote (classification) or mean (regression)."""
    if e.inbag is None:
        raise TreeError("ensemble carries no bootstrap record")
    if e.task == "classification":
        votes = np.zeros((d.n, e.target.n_levels))
    else:
        acc = np.zeros(d.n)
        cnt = np.zeros(d.n)
    for t, bag in zip(e.trees, e.inbag):
        oob = np.setdiff1d(np.arange(d.n), bag)
        if oob.size == 0:
            continue
        leaves = route_rows(t, d, oob)
        codes = _pred_codes(t, e.target, e.task)[leaves - 1]
        if e.task == "classification":
            votes[oob, codes] += 1.0
        else:
            acc[oob] += codes
            cnt[oob] += 1.0
    if e.task == "classification":
        voted = votes.sum(axis=1) > 0
        if not voted.any():
            raise TreeError("no out-of-bag instances")
        pred = np.argmax(votes[voted], axis=1)
        return float(np.mean(pred != d.y[voted]))
    voted = cnt > 0
    if not voted.any():
        raise TreeError("no out-of-bag instances")
    return float(np.mean((acc[voted] / cnt[voted] - d.y[voted]) ** 2))


def importance(e: Ensemble) -> np.ndarray:
    """Per-feature impurity-decrease scores normalized so the max is 1."""
    if e.feature_gains is None:
        raise TreeError("importance requires an ensemble built with recorded gains")
    top = float(e.feature_gains.max()) if len(e.feature_gains) else 0.0
    if top <= 0.0:
        return np.zeros_like(e.feature_gains)
    return e.feature_gains / top


def _fmt_value(v) -> str:
    return repr(float(v))


def export_node_tables(e: Ensemble, path) -> None:
    """Write the ensemble in the flat interchange CSV (one row per node)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(NODE_TABLE_HEADER + "\n")
        for ti, t in enumerate(e.trees, start=1):
            for i in range(t.n_nodes):
                pred = t.pred[i]
                if pred is None:
                    pred_s = "0"
                elif e.task == "classification":
                    pred_s = pred
                else:
                    pred_s = _fmt_value(pred)
                fh.write(
                    f"{ti},{i + 1},{t.left[i]},{t.right[i]},{t.split_var[i]},"
                    f"{_fmt_value(t.split_point[i])},{t.status[i]},{pred_s}\n"
                )


def import_node_tables(path, schema, target) -> Ensemble:
    """Read an interchange CSV back into an Ensemble and validate every tree.

    Node ids within a tree must be exactly 1..K; tree ids must be 1..T in
    order. Predictions are level tokens for a categorical target, decimal
    numbers otherwise; internal nodes use the sentinel "0".
    """
    task = "classification" if target.kind == CATEGORICAL else "regression"
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != NODE_TABLE_HEADER:
        raise TreeError(f"{path}: missing node-table header")
    by_tree: dict[int, list] = {}
    for ln, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 8:
            raise TreeError(f"{path}, line {ln}: expected 8 cells, got {len(cells)}")
        try:
            ti = int(cells[0])
            node = int(cells[1])
            l, r, v = int(cells[2]), int(cells[3]), int(cells[4])
            point = float(cells[5])
            st = int(cells[6])
        except ValueError as exc:
            raise TreeError(f"{path}, line {ln}: {exc}") from None
        by_tree.setdefault(ti, []).append((node, l, r, v, point, st, cells[7], ln))
    if sorted(by_tree) != list(range(1, len(by_tree) + 1)):
        raise TreeError(f"{path}: tree ids must be 1..{len(by_tree)}")
    trees = []
    for ti in range(1, len(by_tree) + 1):
        rows = by_tree[ti]
        k = len(rows)
        if sorted(node for node, *_ in rows) != list(range(1, k + 1)):
            raise TreeError(f"tree {ti}: node ids must be exactly 1..{k}")
        left = np.zeros(k, dtype=np.int64)
        right = np.zeros(k, dtype=np.int64)
        split_var = np.zeros(k, dtype=np.int64)
        split_point = np.zeros(k, dtype=np.float64)
        status = np.zeros(k, dtype=np.int64)
        preds: list = [None] * k
        for node, l, r, v, point, st, pred_s, ln in rows:
            i = node - 1
            left[i], right[i], split_var[i] = l, r, v
            split_point[i], status[i] = point, st
            if st == -1:
                if task == "classification":
                    if pred_s not in target.levels:
                        raise TreeError(
                            f"tree {ti}, node {node}: unknown prediction {pred_s!r}"
                        )
                    preds[i] = pred_s
                else:
                    try:
                        preds[i] = float(pred_s)
                    except ValueError:
                        raise TreeError(
                            f"tree {ti}, node {node}: bad numeric prediction {pred_s!r}"
                        ) from None
            elif pred_s != "0":
                raise TreeError(
                    f"tree {ti}, node {node}: internal node must use prediction sentinel 0"
                )
        t = NodeTable(left=left, right=right, split_var=split_var,
                      split_point=split_point, status=status, pred=preds)
        t.validate(schema, task, tree_id=ti)
        trees.append(t)
    if not trees:
        raise TreeError(f"{path}: no trees in file")
    return Ensemble(trees=trees, schema=tuple(schema), target=target, task=task)
