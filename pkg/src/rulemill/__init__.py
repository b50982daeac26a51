"""rulemill: distill tree ensembles into measured, pruned, selected rules,
mine frequent variable interactions, and build ordered rule-list predictors.
"""

from .dataset import (ColumnSchema, DataError, Dataset, discretize_target,
                      generate_team_data, load_bundled, load_csv, split, write_csv)
from .interactions import (AssociationRule, Transaction, best_per_lhs, itemize,
                           mine, rank_interactions)
from .pipeline import (BenchRow, PipelineConfig, bench_dataset, distill,
                       team_pipeline)
from .pruning import PruneParams, PruneStep, decay, prune_rule, prune_rule_steps, prune_rules
from .rules import (Condition, ConditionParseError, InfeasibleCondition, Rule,
                    RuleSet, Term, UncoveredCondition, assign_outcome,
                    assign_outcomes, canonical, condition_mask, dedup,
                    extract_conditions, extract_rules, measure, measured,
                    parse_condition, print_condition, rank_rules)
from .selection import (IndicatorDataset, SelectionParams, SelectionResult,
                        complexity_lambdas, indicator_matrix, select_conditions)
from .stel import RuleList, build_stel, evaluate, predict, predict_dataset
from .trees import (Ensemble, ForestParams, NodeTable, TreeError, build_cart,
                    build_forest, export_node_tables, import_node_tables,
                    importance, oob_error, route)

__version__ = "0.1.0"
