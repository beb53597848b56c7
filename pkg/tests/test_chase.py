"""Tests for the chase and the equivalence oracle."""

import pytest

from wforge.chase import (
    OBLIVIOUS,
    ChaseInstance,
    Fact,
    Verdict,
    chase,
    compare_instances,
    equivalent,
    holds,
    instance_from_database,
    load_edb,
    read_csv,
)
from wforge.exceptions import ArityMismatch, EdbError
from wforge.functions.dialect import parse
from wforge.generator import Scenario, emit_edb, generate, random_database
from wforge.rulespec import Condition, Constant, LabeledNull, Variable

from .programs import HARMLESS, hu_example

EXISTENTIAL = "@input p\n@output q\nr1: q(X, ?Z) :- p(X).\n"


def c(*values):
    return tuple(Constant(str(v)) for v in values)


def run(text, database, **options):
    program = parse(text)
    return chase(program, instance_from_database(program, database), **options)


class TestChase:
    def test_transitive_closure(self):
        instance, completed = run(HARMLESS, {"e": [("1", "2"), ("2", "3"), ("3", "4")]})
        assert completed
        closure = {fact.args for fact in instance.facts("t")}
        assert closure == {c(1, 2), c(2, 3), c(3, 4), c(1, 3), c(2, 4), c(1, 4)}

    def test_restricted_chase_fires_once(self):
        program = parse(EXISTENTIAL)
        instance, completed = chase(program, instance_from_database(program, {"p": [("a",)]}))
        assert completed
        assert instance.facts("q") == [Fact("q", (Constant("a"), LabeledNull(0)))]
        assert instance.facts("sk_r1_Z") == [Fact("sk_r1_Z", (Constant("a"), LabeledNull(0)))]
        assert instance.null_origin[0] == ("sk_r1_Z", (Constant("a"),))
        before = len(instance)
        _, completed = chase(program, instance)
        assert completed
        assert len(instance) == before

    def test_restricted_chase_reuses_existing_witness(self):
        text = "@input p\n@input s\n@output q\nr0: q(X, Y) :- s(X, Y).\nr1: q(X, ?Z) :- p(X).\n"
        instance, _ = run(text, {"p": [("a",)], "s": [("a", "b")]})
        assert instance.facts("q") == [Fact("q", c("a", "b"))]
        assert instance.next_null_id == 0

    def test_oblivious_chase_fires_every_trigger(self):
        text = "@input p\n@input s\n@output q\nr0: q(X, Y) :- s(X, Y).\nr1: q(X, ?Z) :- p(X).\n"
        instance, completed = run(text, {"p": [("a",)], "s": [("a", "b")]}, variant=OBLIVIOUS)
        assert completed
        assert len(instance.facts("q")) == 2

    def test_step_bound_zero(self):
        instance, completed = run(EXISTENTIAL, {"p": [("a",)]}, step_bound=0)
        assert not completed
        assert instance.facts("q") == []
        instance, completed = run(EXISTENTIAL, {}, step_bound=0)
        assert completed

    def test_step_bound_cuts_infinite_chase(self):
        text = "@input p\n@output q\nr1: q(X, ?Z) :- p(X).\nr2: q(Y, ?Z) :- q(X, Y).\n"
        instance, completed = run(text, {"p": [("a",)]}, step_bound=50)
        assert not completed
        assert len(instance.steps) == 50
        ids = [n.id for fact in instance.facts("q") for n in fact.args if isinstance(n, LabeledNull)]
        assert sorted(set(ids)) == list(range(instance.next_null_id))

    def test_conditions(self):
        text = '@input e\n@output big\nb: big(X) :- e(X, Y), X > 9, Y != "x".\n'
        instance, _ = run(text, {"e": [("10", "y"), ("3", "y"), ("12", "x"), ("100", "z")]})
        assert {fact.args for fact in instance.facts("big")} == {c(10), c(100)}

    def test_comparison_with_a_null_fails(self):
        cond = Condition(Variable("X"), "!=", Constant("1"))
        assert not holds(cond, {Variable("X"): LabeledNull(0)})
        assert holds(cond, {Variable("X"): Constant("2")})
        assert holds(Condition(Variable("X"), "<", Constant("b")), {Variable("X"): Constant("a")})

    def test_dom_over_active_domain(self):
        text = "@input e\n@output p\nr: p(X) :- e(X), dom_1(X).\n"
        instance, _ = run(text, {"e": [("1",), ("2",)]})
        assert instance.facts("dom_1") == [Fact("dom_1", c(1)), Fact("dom_1", c(2))]
        assert len(instance.facts("p")) == 2

    def test_deterministic_steps(self):
        program = hu_example()
        database = random_database(program, 5)
        first, _ = chase(program, instance_from_database(program, database))
        second, _ = chase(program, instance_from_database(program, database))
        assert [s.fact for s in first.steps] == [s.fact for s in second.steps]
        assert first.dump() == second.dump()

    def test_arity_of_database_rows(self):
        with pytest.raises(ArityMismatch):
            run(HARMLESS, {"e": [("1", "2", "3")]})


def naive_evaluation(program, database):
    """Bottom-up fixpoint by brute force over all fact combinations."""
    facts = {(predicate, tuple(row)) for predicate, rows in database.items() for row in rows}

    def matches(atoms, binding):
        if not atoms:
            yield binding
            return
        atom, rest = atoms[0], atoms[1:]
        for predicate, values in list(facts):
            if predicate != atom.predicate or len(values) != len(atom.terms):
                continue
            extended = dict(binding)
            for term, value in zip(atom.terms, values):
                if isinstance(term, Variable):
                    if extended.setdefault(term, value) != value:
                        break
                elif term.value != value:
                    break
            else:
                yield from matches(rest, extended)

    while True:
        derived = set()
        for rule in program.rules:
            for binding in matches(list(rule.body), {}):
                values = tuple(binding[t] if isinstance(t, Variable) else t.value for t in rule.head.terms)
                derived.add((rule.head.predicate, values))
        if derived <= facts:
            return facts
        facts |= derived


@pytest.mark.parametrize("seed", range(20))
def test_chase_matches_naive_evaluation_on_datalog(seed):
    scenario = Scenario(
        input_output_sequences=[3, 3],
        num_linear_rules=2,
        num_harmless_join_rules=4,
        num_recursive_rules=1,
        seed=seed,
    )
    program, _ = generate(scenario)
    database = random_database(program, seed)
    instance, completed = chase(program, instance_from_database(program, database))
    assert completed
    chased = {(fact.predicate, tuple(a.value for a in fact.args)) for fact in instance}
    assert chased == naive_evaluation(program, database)


class TestLoadEdb:
    def test_emitted_data_loads(self, tmp_path):
        scenario = Scenario(input_output_sequences=[2], num_linear_rules=1, num_harmless_join_rules=1, records_per_csv=25)
        program, _ = generate(scenario)
        emit_edb(program, scenario, tmp_path)
        instance = load_edb(program, tmp_path)
        for predicate in program.inputs:
            rows = read_csv(tmp_path / f"{predicate}.csv")
            assert len(rows) == 25
            assert len(instance.facts(predicate)) == len(set(rows))

    def test_empty_csv(self, tmp_path):
        (tmp_path / "e.csv").write_text("")
        instance = load_edb(parse(HARMLESS), tmp_path)
        assert instance.facts("e") == []

    def test_missing_file(self, tmp_path):
        with pytest.raises(EdbError):
            load_edb(parse(HARMLESS), tmp_path)

    def test_row_width(self, tmp_path):
        (tmp_path / "e.csv").write_text("1,2,3\n")
        with pytest.raises(ArityMismatch):
            load_edb(parse(HARMLESS), tmp_path)

    def test_bind_path(self, tmp_path):
        (tmp_path / "sub").mkdir()
        (tmp_path / "sub" / "edges.csv").write_text("1,2\n2,3\n")
        program = parse('@input e\n@output t\n@bind e "csv" "sub/edges.csv"\nt1: t(X, Y) :- e(X, Y).\n')
        assert len(load_edb(program, tmp_path).facts("e")) == 2


class TestEquivalence:
    def test_reflexive(self):
        program = hu_example()
        databases = [random_database(program, 1, n) for n in range(5)]
        verdicts = equivalent(program, program, databases, workers=1)
        assert all(v.verdict == Verdict.EQUAL for v in verdicts)
        assert [v.database for v in verdicts] == list(range(5))

    def test_missing_rule_is_noticed(self):
        program = parse(HARMLESS)
        mutated = program.with_rules(program.rules[:1])
        verdicts = equivalent(program, mutated, [{"e": [("1", "2"), ("2", "3")]}])
        assert verdicts[0].verdict == Verdict.NOT_EQUAL
        assert verdicts[0].witness == "t(1, 3)"

    def test_inconclusive_when_bound_is_hit(self):
        program = parse(HARMLESS)
        verdicts = equivalent(program, program, [{"e": [("1", "2"), ("2", "3")]}], step_bound=1)
        assert verdicts[0].verdict == Verdict.INCONCLUSIVE
        assert verdicts[0].to_dict()["completed"] == [False, False]

    def test_nulls_compare_up_to_renaming(self):
        left = ChaseInstance([Fact("q", (Constant("a"), LabeledNull(0)))])
        right = ChaseInstance([Fact("q", (Constant("a"), LabeledNull(7)))])
        assert compare_instances(left, right, ["q"]) == (Verdict.EQUAL, None)
        assert compare_instances(right, left, ["q"]) == (Verdict.EQUAL, None)

    def test_null_is_weaker_than_constant(self):
        left = ChaseInstance([Fact("q", (Constant("a"), LabeledNull(0)))])
        right = ChaseInstance([Fact("q", c("a", "b"))])
        assert compare_instances(left, right, ["q"]) == (Verdict.NOT_EQUAL, "q(a, b)")
