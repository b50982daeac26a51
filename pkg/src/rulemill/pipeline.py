"""End-to-end flows: forest -> conditions -> rules -> list, plus the benchmark.

`distill` runs the standard chain (train forest, extract conditions with a
depth cutoff, cap and dedup them, assign outcomes, prune, build the ordered
rule list). `team_pipeline` runs the synthetic team walkthrough including
condition selection and interaction mining. `bench` repeats random 2/3
train/test splits, compares the rule list against a single CART tree, and
reports mean errors, the relative difference, and a paired t statistic.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, generate_team_data, load_bundled, load_csv, split
from .interactions import best_per_lhs, itemize, mine, rank_interactions
from .pruning import PruneParams, prune_rules
from .rules import RuleSet, assign_outcomes, dedup, extract_conditions, extract_rules
from .selection import SelectionParams, SelectionResult, select_conditions
from .stel import RuleList, build_stel, evaluate
from .trees import Ensemble, ForestParams, build_cart, build_forest


@dataclass(frozen=True)
class PipelineConfig:
    """Shared defaults for the distillation chain and the benchmark."""

    n_trees: int = 100
    mtry: int | None = None
    min_leaf: int | None = None
    max_depth: int = 6
    condition_cap: int = 2000
    regularization: float | None = None  # uniform penalty for the forest build
    prune: PruneParams = field(default_factory=PruneParams)
    stel_threshold: float = 0.01
    mine_min_sup: float = 0.01
    mine_min_conf: float = 0.5
    mine_max_len: int = 3
    seed: int = 0


def forest_params(d: Dataset, cfg: PipelineConfig, seed=None) -> ForestParams:
    reg = None
    if cfg.regularization is not None:
        reg = tuple([float(cfg.regularization)] * d.p)
    return ForestParams(
        n_trees=cfg.n_trees, mtry=cfg.mtry, min_leaf=cfg.min_leaf,
        seed=cfg.seed if seed is None else seed, regularization=reg,
    )


def cap_conditions(conds, cap: int, seed: int):
    """Uniform sample of at most `cap` conditions, keeping original order."""
    if cap is None or len(conds) <= cap:
        return list(conds)
    rng = np.random.default_rng(seed)
    keep = np.sort(rng.choice(len(conds), size=cap, replace=False))
    return [conds[i] for i in keep]


@dataclass
class DistillResult:
    ensemble: Ensemble
    conditions: list
    rules: RuleSet
    pruned: RuleSet
    rule_list: RuleList


def distill(d: Dataset, cfg: PipelineConfig = PipelineConfig(), seed=None) -> DistillResult:
    """Train a forest and summarize it into an ordered rule list."""
    run_seed = cfg.seed if seed is None else seed
    ens = build_forest(d, forest_params(d, cfg, run_seed))
    conds = extract_conditions(ens, cfg.max_depth)
    conds = cap_conditions(conds, cfg.condition_cap, run_seed)
    conds = dedup(conds)
    rules = assign_outcomes(conds, d)
    pruned = prune_rules(rules, d, cfg.prune)
    deduped_rules = []
    seen = set()
    for r in pruned.rules:
        key = (r.condition, r.outcome)
        if key not in seen:
            seen.add(key)
            deduped_rules.append(r)
    pruned = RuleSet(deduped_rules, provenance=pruned.provenance)
    rule_list = build_stel(pruned, d, cfg.stel_threshold)
    return DistillResult(ens, conds, rules, pruned, rule_list)


@dataclass
class TeamRun:
    data: Dataset
    ensemble: Ensemble
    raw_rules: RuleSet  # straight from the leaves, duplicates kept
    conditions: list
    rules: RuleSet
    pruned: RuleSet
    selection: SelectionResult
    selected_rules: RuleSet
    rule_list: RuleList
    interactions: list  # ranked best-per-lhs pair interactions


TEAM_REGULARIZATION = 0.8
TEAM_DATA_SEED = 8


def team_pipeline(seed: int = 0, data_seed: int = TEAM_DATA_SEED, n: int = 100,
                  p: int = 20, active: int = 10,
                  cfg: PipelineConfig | None = None) -> TeamRun:
    """Full walkthrough on the synthetic team data.

    `data_seed` fixes the illustrative dataset; `seed` drives the stochastic
    pipeline (forest bootstraps, condition sampling, selection). The forest
    is regularized (uniform penalty) so splits concentrate on the informative
    players; conditions are extracted with the depth cutoff, deduped,
    assigned, pruned, and a compact subset is selected. The rule list is
    built from the selected rules, and pair interactions are mined from the
    raw leaf rules.
    """
    if cfg is None:
        cfg = PipelineConfig(regularization=TEAM_REGULARIZATION, seed=seed)
    d = generate_team_data(n=n, p=p, active=active, seed=data_seed)
    ens = build_forest(d, forest_params(d, cfg, seed))
    raw_rules = extract_rules(ens)
    conds = dedup(cap_conditions(extract_conditions(ens, cfg.max_depth),
                                 cfg.condition_cap, seed))
    rules = assign_outcomes(conds, d)
    pruned = prune_rules(rules, d, cfg.prune)
    sel = select_conditions([r.condition for r in pruned.rules], d,
                            SelectionParams(forest=ForestParams(n_trees=cfg.n_trees,
                                                                seed=seed)))
    selected_rules = assign_outcomes(sel.conditions, d)
    rule_list = build_stel(selected_rules, d, cfg.stel_threshold)
    mined = mine(itemize(raw_rules), min_sup=cfg.mine_min_sup,
                 min_conf=cfg.mine_min_conf, max_len=cfg.mine_max_len)
    pairs = [r for r in best_per_lhs(mined) if r.lhs_length >= 2]
    interactions = rank_interactions(pairs, keys=("support", "confidence", "length"))
    return TeamRun(d, ens, raw_rules, conds, rules, pruned, sel, selected_rules,
                   rule_list, interactions)


@dataclass
class BenchRow:
    dataset: str
    runs: int
    stel_mean: float
    cart_mean: float
    relative_difference: float
    t_statistic: float
    seconds: float


def _paired_t(diffs: np.ndarray) -> float:
    r = len(diffs)
    if r < 2:
        return float("nan")
    sd = float(np.std(diffs, ddof=1))
    if sd == 0.0:
        return float("nan")
    return float(np.mean(diffs) / (sd / np.sqrt(r)))


def bench_dataset(name: str, d: Dataset, runs: int = 10,
                  cfg: PipelineConfig = PipelineConfig(),
                  train_fraction: float = 2 / 3) -> BenchRow:
    """Repeated random splits; rule-list vs single-CART test errors."""
    stel_errors = np.zeros(runs)
    cart_errors = np.zeros(runs)
    t0 = time.perf_counter()
    for r in range(runs):
        run_seed = cfg.seed + r
        train, test = split(d, train_fraction, run_seed)
        result = distill(train, cfg, seed=run_seed)
        stel_errors[r] = evaluate(result.rule_list, test)
        cart = build_cart(train, min_leaf=5, seed=run_seed)
        cart_errors[r] = _cart_error(cart, test)
    elapsed = time.perf_counter() - t0
    stel_mean = float(stel_errors.mean())
    cart_mean = float(cart_errors.mean())
    hi, lo = max(stel_mean, cart_mean), min(stel_mean, cart_mean)
    rel = 0.0 if hi == 0.0 else (hi - lo) / hi
    return BenchRow(
        dataset=name, runs=runs, stel_mean=stel_mean, cart_mean=cart_mean,
        relative_difference=rel, t_statistic=_paired_t(cart_errors - stel_errors),
        seconds=elapsed,
    )


def _cart_error(e: Ensemble, d: Dataset) -> float:
    from .trees import _pred_codes, route_rows

    t = e.trees[0]
    leaves = route_rows(t, d)
    codes = _pred_codes(t, e.target, e.task)[leaves - 1]
    if e.task == "classification":
        return float(np.mean(codes != d.y))
    return float(np.mean((codes - d.y) ** 2))


def resolve_dataset(spec: str, seed: int = 0) -> tuple[str, Dataset]:
    """Map a dataset argument to (name, data): bundled name, "team", or path."""
    from .dataset import BUNDLED

    if spec == "team":
        return "team", generate_team_data(n=100, p=20, active=10, seed=seed)
    if spec in BUNDLED:
        return spec, load_bundled(spec)
    return spec, load_csv(spec)
