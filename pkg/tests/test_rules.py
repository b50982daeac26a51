import numpy as np
import pytest

from rulemill.dataset import (CATEGORICAL, NUMERIC, ColumnSchema, Dataset,
                              generate_team_data)
from rulemill.rules import (OP_GT, OP_IN, OP_LE, Condition, ConditionParseError,
                            ExtractionWarning, InfeasibleCondition, Rule, RuleSet,
                            TRUE, UncoveredCondition, assign_outcome,
                            assign_outcomes, canonical, condition_mask, dedup,
                            extract_conditions, extract_rules, measure, measured,
                            parse_condition, print_condition, rank_rules,
                            read_rule_table, write_rule_table, Term)
from rulemill.trees import ForestParams, NodeTable, build_forest, route, route_rows


def team(seed=8, n=100):
    return generate_team_data(n, 20, 10, seed)


def cond(text, d):
    return parse_condition(text, d.schema)


def manual_tree(rows, preds):
    """rows: list of (left, right, split_var, split_point, status)."""
    return NodeTable(
        left=np.array([r[0] for r in rows], dtype=np.int64),
        right=np.array([r[1] for r in rows], dtype=np.int64),
        split_var=np.array([r[2] for r in rows], dtype=np.int64),
        split_point=np.array([float(r[3]) for r in rows]),
        status=np.array([r[4] for r in rows], dtype=np.int64),
        pred=preds,
    )


def wrap(tree, schema, target):
    from rulemill.trees import Ensemble

    task = "classification" if target.kind == CATEGORICAL else "regression"
    return Ensemble(trees=[tree], schema=schema, target=target, task=task)


NUM_SCHEMA = (ColumnSchema("x1", NUMERIC), ColumnSchema("x2", NUMERIC))
CLS_TARGET = ColumnSchema("t", CATEGORICAL, ("a", "b"))


class TestCanonical:
    def test_same_var_le_intersection(self):
        c = canonical([Term(0, OP_LE, 5.0), Term(0, OP_LE, 3.0)])
        assert c.terms == (Term(0, OP_LE, 3.0),)

    def test_interval_pair_kept(self):
        c = canonical([Term(0, OP_GT, 1.0), Term(0, OP_LE, 4.0)])
        assert [t.op for t in c.terms] == [OP_LE, OP_GT]

    def test_empty_interval_raises(self):
        with pytest.raises(InfeasibleCondition):
            canonical([Term(0, OP_LE, 1.0), Term(0, OP_GT, 2.0)])

    def test_set_intersection(self):
        c = canonical([Term(0, OP_IN, frozenset({0, 1})), Term(0, OP_IN, frozenset({1, 2}))])
        assert c.terms == (Term(0, OP_IN, frozenset({1})),)

    def test_empty_set_raises(self):
        with pytest.raises(InfeasibleCondition):
            canonical([Term(0, OP_IN, frozenset({0})), Term(0, OP_IN, frozenset({1}))])

    def test_sorted_by_var_and_op(self):
        c = canonical([Term(2, OP_GT, 1.0), Term(0, OP_LE, 2.0), Term(1, OP_IN, frozenset({0}))])
        assert [t.var for t in c.terms] == [0, 1, 2]

    def test_idempotent(self):
        terms = [Term(1, OP_LE, 3.0), Term(0, OP_GT, 0.5), Term(1, OP_LE, 2.0)]
        once = canonical(terms)
        twice = canonical(once.terms)
        assert once == twice


class TestExtractRules:
    def test_single_leaf_tree(self):
        t = manual_tree([(0, 0, 0, 0.0, -1)], ["a"])
        rs = extract_rules(wrap(t, NUM_SCHEMA, CLS_TARGET))
        assert len(rs) == 1
        assert rs.rules[0].condition == TRUE
        assert rs.rules[0].outcome == "a"

    def test_depth_one_numeric(self):
        t = manual_tree([(2, 3, 1, 2.5, 1), (0, 0, 0, 0.0, -1), (0, 0, 0, 0.0, -1)],
                        [None, "a", "b"])
        rs = extract_rules(wrap(t, NUM_SCHEMA, CLS_TARGET))
        texts = [print_condition(r.condition, NUM_SCHEMA) for r in rs.rules]
        assert texts == ["X1 <= 2.5", "X1 > 2.5"]
        assert [r.outcome for r in rs.rules] == ["a", "b"]

    def test_nested_same_var_merges(self):
        t = manual_tree(
            [(2, 3, 1, 5.0, 1), (4, 5, 1, 3.0, 1), (0, 0, 0, 0.0, -1),
             (0, 0, 0, 0.0, -1), (0, 0, 0, 0.0, -1)],
            [None, None, "hi", "lo", "mid"])
        rs = extract_rules(wrap(t, NUM_SCHEMA, CLS_TARGET))
        texts = [print_condition(r.condition, NUM_SCHEMA) for r in rs.rules]
        assert "X1 <= 3.0" in texts                     # merged nested <=
        assert "X1 <= 5.0 & X1 > 3.0" in texts          # interval
        assert "X1 > 5.0" in texts

    def test_impossible_path_warns_and_drops(self):
        # right child of (x1 <= 3) claims x1 <= 2: infeasible x1 > 3 & x1 <= 2
        t = manual_tree(
            [(2, 3, 1, 3.0, 1), (0, 0, 0, 0.0, -1), (4, 5, 1, 2.0, 1),
             (0, 0, 0, 0.0, -1), (0, 0, 0, 0.0, -1)],
            [None, "a", None, "b", "a"])
        with pytest.warns(ExtractionWarning):
            rs = extract_rules(wrap(t, NUM_SCHEMA, CLS_TARGET))
        assert len(rs) == 2  # infeasible left-of-right leaf dropped

    def test_partition_property(self):
        d = team()
        e = build_forest(d, ForestParams(n_trees=5, seed=0))
        rs = extract_rules(e)
        per_tree = {}
        for t_idx, t in enumerate(e.trees):
            leaves = int((t.status == -1).sum())
            per_tree[t_idx] = leaves
        start = 0
        for t_idx, t in enumerate(e.trees):
            total = 0.0
            for r in rs.rules[start:start + per_tree[t_idx]]:
                total += condition_mask(r.condition, d).mean()
            start += per_tree[t_idx]
            assert total == pytest.approx(1.0)

    def test_routing_equivalence(self):
        d = team(n=60)
        e = build_forest(d, ForestParams(n_trees=4, seed=1))
        rs = extract_rules(e)
        start = 0
        for t in e.trees:
            leaves = int((t.status == -1).sum())
            tree_rules = rs.rules[start:start + leaves]
            start += leaves
            routed = route_rows(t, d)
            sat = np.stack([condition_mask(r.condition, d) for r in tree_rules])
            assert np.all(sat.sum(axis=0) == 1)
            for i in range(d.n):
                j = int(np.argmax(sat[:, i]))
                leaf_id, pred = route(t, d.row(i), d.schema)
                assert routed[i] == leaf_id
                assert tree_rules[j].outcome == pred


class TestExtractConditions:
    def test_max_depth_one_is_root_condition(self):
        d = team(n=50)
        e = build_forest(d, ForestParams(n_trees=3, seed=0))
        conds = extract_conditions(e, max_depth=1)
        assert conds == [TRUE] * 3

    def test_unlimited_matches_rules(self):
        d = team(n=50)
        e = build_forest(d, ForestParams(n_trees=3, seed=0))
        conds = extract_conditions(e, max_depth=-1)
        rules = extract_rules(e)
        assert conds == [r.condition for r in rules.rules]

    def test_invalid_depth(self):
        d = team(n=20)
        e = build_forest(d, ForestParams(n_trees=1, seed=0))
        with pytest.raises(ValueError):
            extract_conditions(e, 0)

    def test_cutoff_shortens(self):
        d = team(n=80)
        e = build_forest(d, ForestParams(n_trees=5, seed=2))
        conds = extract_conditions(e, max_depth=3)
        assert max(c.length for c in conds) <= 2


class TestDedup:
    def test_exact_duplicates(self):
        d = team(n=20)
        c = cond("X1 in {N}", d)
        assert dedup([c, c]) == [c]

    def test_order_insensitive_terms(self, ):
        d = team(n=20)
        a = canonical([Term(0, OP_IN, frozenset({0})), Term(1, OP_IN, frozenset({1}))])
        b = canonical([Term(1, OP_IN, frozenset({1})), Term(0, OP_IN, frozenset({0}))])
        assert dedup([a, b]) == [a]

    def test_distinct_sets_kept(self):
        d = team(n=20)
        a = cond("X1 in {N}", d)
        b = cond("X1 in {Y}", d)
        assert dedup([a, b]) == [a, b]


class TestAssignMeasure:
    def test_empty_condition_majority(self):
        d = team()
        r = assign_outcome(TRUE, d)
        counts = np.bincount(d.y)
        assert r.outcome == d.target.levels[int(np.argmax(counts))]
        assert r.freq == 1.0

    def test_team_nn_rule(self):
        d = team()
        r = assign_outcome(cond("X1 in {N} & X2 in {N}", d), d)
        assert r.outcome == "lose"
        assert r.err == 0.0

    def test_team_yn_rule(self):
        d = team()
        r = assign_outcome(cond("X1 in {Y} & X2 in {N}", d), d)
        assert r.outcome == "win"
        assert r.err == 0.0

    def test_zero_coverage_raises(self):
        d = team()
        impossible = Condition((Term(0, OP_IN, frozenset({0})),))
        # shrink data so some condition is uncovered: single-row dataset
        one = d.take([0])
        x1 = one.row(0)[0]
        other_code = one.schema[0].levels.index("Y" if x1 == "N" else "N")
        c = Condition((Term(0, OP_IN, frozenset({other_code})),))
        with pytest.raises(UncoveredCondition):
            assign_outcome(c, one)

    def test_assign_outcomes_drops_uncovered(self):
        d = team().take([0])
        x1 = d.row(0)[0]
        other = d.schema[0].levels.index("Y" if x1 == "N" else "N")
        good = TRUE
        bad = Condition((Term(0, OP_IN, frozenset({other})),))
        with pytest.warns(ExtractionWarning):
            rs = assign_outcomes([good, bad], d)
        assert len(rs) == 1

    def test_measure_three_term_rule(self):
        d = team()
        r = Rule(cond("X1 in {N} & X2 in {N} & X19 in {N}", d), "lose")
        length, freq, err = measure(r, d)
        assert length == 3
        assert err == 0.0
        assert 0.02 <= freq <= 0.2
        assert freq * d.n == int(freq * d.n)

    def test_measure_regression_constant(self):
        d = Dataset(schema=(ColumnSchema("x", NUMERIC),),
                    target=ColumnSchema("t", NUMERIC),
                    columns=(np.array([1.0, 2.0, 3.0]),),
                    y=np.array([2.0, 2.0, 2.0]))
        assert measure(Rule(TRUE, 2.0), d)[2] == 0.0

    def test_measure_regression_eq1(self):
        d = Dataset(schema=(ColumnSchema("x", NUMERIC),),
                    target=ColumnSchema("t", NUMERIC),
                    columns=(np.array([0.0, 1.0]),),
                    y=np.array([1.0, 3.0]))
        assert measure(Rule(TRUE, 2.0), d)[2] == pytest.approx(1.0)

    def test_measure_agrees_with_naive_scan(self):
        d = team(n=60)
        rng = np.random.default_rng(0)
        e = build_forest(d, ForestParams(n_trees=3, seed=3))
        rs = extract_rules(e)
        sample = [rs.rules[i] for i in rng.choice(len(rs.rules), 25, replace=False)]
        for r in sample:
            try:
                length, freq, err = measure(r, d)
            except UncoveredCondition:
                continue
            covered = 0
            wrong = 0
            for i in range(d.n):
                row = d.row(i)
                ok = True
                for t in r.condition.terms:
                    v = row[t.var]
                    if t.op == OP_IN:
                        ok = d.schema[t.var].levels.index(v) in t.value
                    elif t.op == OP_LE:
                        ok = v <= t.value
                    else:
                        ok = v > t.value
                    if not ok:
                        break
                if ok:
                    covered += 1
                    if d.target_value(i) != r.outcome:
                        wrong += 1
            assert freq == pytest.approx(covered / d.n)
            assert err == pytest.approx(wrong / covered)


class TestGrammar:
    def test_two_set_terms(self):
        d = team(n=20)
        c = cond("X1 in {N} & X2 in {Y}", d)
        assert c.length == 2
        assert all(t.op == OP_IN for t in c.terms)

    def test_numeric_le(self):
        schema = tuple(ColumnSchema(f"x{i}", NUMERIC) for i in range(4))
        c = parse_condition("X3 <= 2.55", schema)
        assert c.terms == (Term(2, OP_LE, 2.55),)

    def test_empty_set_is_syntax_error(self):
        d = team(n=20)
        with pytest.raises(ConditionParseError):
            cond("X1 in {}", d)

    def test_true_literal(self):
        d = team(n=20)
        assert cond("TRUE", d) == TRUE
        assert print_condition(TRUE, d.schema) == "TRUE"

    def test_unknown_variable(self):
        d = team(n=20)
        with pytest.raises(ConditionParseError, match="X99"):
            cond("X99 in {N}", d)

    def test_type_mismatch(self):
        d = team(n=20)
        with pytest.raises(ConditionParseError, match="categorical"):
            cond("X1 <= 2.0", d)
        schema = (ColumnSchema("x", NUMERIC),)
        with pytest.raises(ConditionParseError, match="numeric"):
            parse_condition("X1 in {a}", schema)

    def test_unknown_level(self):
        d = team(n=20)
        with pytest.raises(ConditionParseError, match="unknown level"):
            cond("X1 in {Q}", d)

    def test_offset_reported(self):
        d = team(n=20)
        try:
            cond("X1 in {N} @ X2 in {Y}", d)
        except ConditionParseError as exc:
            assert exc.offset == 9  # separator expected right after the set
        else:
            pytest.fail("expected parse error")

    def test_print_parse_identity_random(self):
        schema = (ColumnSchema("c1", CATEGORICAL, ("a", "b", "c")),
                  ColumnSchema("n1", NUMERIC),
                  ColumnSchema("c2", CATEGORICAL, ("u", "v")),
                  ColumnSchema("n2", NUMERIC))
        rng = np.random.default_rng(42)
        for _ in range(200):
            terms = []
            for var, cs in enumerate(schema):
                if rng.random() < 0.5:
                    continue
                if cs.kind == CATEGORICAL:
                    k = rng.integers(1, cs.n_levels)
                    codes = frozenset(rng.choice(cs.n_levels, size=k, replace=False).tolist())
                    terms.append(Term(var, OP_IN, codes))
                else:
                    if rng.random() < 0.5:
                        terms.append(Term(var, OP_LE, round(float(rng.normal()) * 10, 3)))
                    if rng.random() < 0.5:
                        terms.append(Term(var, OP_GT, round(float(rng.normal()) * 10 - 20, 3)))
            try:
                c = canonical(terms)
            except InfeasibleCondition:
                continue
            text = print_condition(c, schema)
            assert parse_condition(text, schema) == c
            assert print_condition(parse_condition(text, schema), schema) == text


class TestRankRules:
    def rules(self, d):
        a = measured(Rule(cond("X1 in {N} & X2 in {N}", d), "lose"), d)
        b = measured(Rule(cond("X1 in {Y} & X2 in {Y}", d), "lose"), d)
        c = measured(Rule(cond("X1 in {N}", d), "lose"), d)
        return a, b, c

    def test_err_then_freq(self):
        d = team()
        a, b, c = self.rules(d)
        rs = rank_rules(RuleSet([b, a, c]), keys=("err", "freq"))
        assert rs.rules[0].freq == max(a.freq, b.freq)
        assert rs.rules[-1] is c  # err > 0 sorts last

    def test_stability_on_ties(self):
        d = team()
        a, _, _ = self.rules(d)
        dup = Rule(a.condition, a.outcome, freq=a.freq, err=a.err)
        rs = rank_rules(RuleSet([a, dup]), keys=("err", "freq", "len"))
        assert rs.rules[0] is a

    def test_len_key(self):
        d = team()
        a, b, c = self.rules(d)
        rs = rank_rules(RuleSet([a, c]), keys=("len",))
        assert rs.rules[0] is c

    def test_unmeasured_rejected(self):
        d = team()
        with pytest.raises(ValueError):
            rank_rules(RuleSet([Rule(TRUE, "lose")]), keys=("err",))


class TestRuleTables:
    def test_roundtrip(self, tmp_path):
        d = team()
        rules = [
            measured(Rule(cond("X1 in {N} & X2 in {N}", d), "lose"), d),
            measured(Rule(cond("X3 in {Y}", d), "win"), d),
            measured(Rule(TRUE, "lose"), d),
        ]
        path = tmp_path / "rules.csv"
        write_rule_table(RuleSet(rules), path, d.schema, d.task)
        back = read_rule_table(path, d.schema, d.target)
        assert [r.condition for r in back.rules] == [r.condition for r in rules]
        assert [r.outcome for r in back.rules] == [r.outcome for r in rules]
        assert [r.freq for r in back.rules] == [r.freq for r in rules]

    def test_empty_set_header_only(self, tmp_path):
        d = team()
        path = tmp_path / "rules.csv"
        write_rule_table(RuleSet([]), path, d.schema, d.task)
        assert path.read_text() == "len,freq,err,condition,pred\n"
        assert len(read_rule_table(path, d.schema, d.target)) == 0

    def test_extra_score_column(self, tmp_path):
        d = team()
        rules = [measured(Rule(cond("X1 in {N}", d), "lose"), d)]
        path = tmp_path / "rules.csv"
        write_rule_table(RuleSet(rules), path, d.schema, d.task,
                         extra=("score", [0.5]))
        text = path.read_text()
        assert text.startswith("len,freq,err,condition,pred,score\n")
        back = read_rule_table(path, d.schema, d.target)
        assert back.rules[0].condition == rules[0].condition
