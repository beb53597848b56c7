"""Tests for parsing and printing programs."""

import itertools

import pytest
from hypothesis import given, settings, strategies

from wforge.exceptions import ArityMismatch, DialectSyntaxError, ProgramError, UnsafeRule
from wforge.functions.dialect import parse, print_program, write_program, parse_file
from wforge.generator import Scenario, generate
from wforge.manager import hje
from wforge.rulespec import Atom, Condition, Constant, Program, Rule, Variable

from .programs import HU_EXAMPLE, RECURSIVE_BETA


def test_parse_reads_rules_annotations_and_existentials():
    program = parse(HU_EXAMPLE)

    assert [rule.id for rule in program.rules] == ["s1", "s2", "rho"]
    assert program.inputs == frozenset({"e1"})
    assert program.outputs == frozenset({"out"})
    s1 = program.rule("s1")
    assert s1.existentials == frozenset({"Z"})
    assert s1.head == Atom("idb1", (Variable("X"), Variable("Z")))


def test_rules_without_label_are_numbered():
    program = parse("@input e\na(X) :- e(X).\nb(X) :- a(X).\n")
    assert [rule.id for rule in program.rules] == ["r1", "r2"]


def test_generated_labels_skip_used_ids():
    program = parse("@input e\nr2: p(X) :- e(X).\nq(X) :- e(X).\nr1: s(X) :- e(X).\nt(X) :- e(X).\n")
    assert [rule.id for rule in program.rules] == ["r2", "r3", "r1", "r4"]


def test_conditions_and_constants():
    program = parse('@input e\np(X, "a b") :- e(X, Y), X >= 3, Y != foo.\n')
    rule = program.rules[0]
    assert rule.conditions == (
        Condition(Variable("X"), ">=", Constant("3")),
        Condition(Variable("Y"), "!=", Constant("foo")),
    )
    assert rule.head.terms[1] == Constant("a b")


def test_bind_annotation():
    program = parse('@input e\n@bind e "csv" "data/e.csv"\np(X) :- e(X).\n')
    bind = program.bind_for("e")
    assert (bind.format, bind.path) == ("csv", "data/e.csv")


def test_print_program_is_stable():
    text = print_program(parse(RECURSIVE_BETA))
    assert text.splitlines()[:3] == ["@input edge", "@input start", "@output out"]
    assert "s1: reach(X, ?Z) :- start(X)." in text
    assert print_program(parse(text)) == text


def test_write_and_read_back(tmp_path):
    program = parse(HU_EXAMPLE)
    path = write_program(program, tmp_path / "nested" / "p.vada")
    assert parse_file(path) == program


@pytest.mark.parametrize("text", ["p(X) :- .", "p(X :- e(X)."])
def test_syntax_errors_carry_location(text):
    with pytest.raises(DialectSyntaxError) as info:
        parse(text)
    assert info.value.line == 1
    assert str(info.value).startswith("line 1")


def test_missing_period():
    with pytest.raises(DialectSyntaxError):
        parse("@input e\np(X) :- e(X)")


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        parse("@input e\np(X) :- e(X).\nq(X) :- e(X, Y).\n")


def test_unsafe_head_variable():
    with pytest.raises(UnsafeRule):
        parse("@input e\np(X, Y) :- e(X).\n")


def test_existential_in_body_is_unsafe():
    with pytest.raises(UnsafeRule):
        parse("@input e\np(X) :- e(?X).\n")


def test_input_defined_by_rule():
    with pytest.raises(ProgramError):
        parse("@input e\ne(X) :- f(X).\n")


def test_duplicate_rule_ids():
    with pytest.raises(ProgramError):
        parse("@input e\nr: p(X) :- e(X).\nr: q(X) :- e(X).\n")


def test_multi_atom_head():
    with pytest.raises(ProgramError):
        parse("@input e\np(X), q(X) :- e(X).\n")


VARIABLES = [Variable(name) for name in ("X", "Y", "W", "V2")]
TERMS = strategies.one_of(
    strategies.sampled_from(VARIABLES),
    strategies.integers(-5, 50).map(lambda n: Constant(str(n))),
    strategies.sampled_from(["a", "bob", "x y", 'q"t']).map(Constant),
)


@strategies.composite
def rules(draw, number):
    body = draw(
        strategies.lists(
            strategies.tuples(strategies.sampled_from(["e", "f"]), strategies.tuples(TERMS, TERMS)),
            min_size=1,
            max_size=3,
        )
    )
    atoms = tuple(Atom(predicate, terms) for predicate, terms in body)
    bound = [t for atom in atoms for t in atom.terms if isinstance(t, Variable)]
    head_choices = bound + [Constant("7"), Variable("Z")]
    head = (draw(strategies.sampled_from(head_choices)), draw(strategies.sampled_from(head_choices)))
    existentials = frozenset({"Z"}) if Variable("Z") in head else frozenset()
    conditions = ()
    if bound and draw(strategies.booleans()):
        op = draw(strategies.sampled_from(["<", "<=", ">", ">=", "!=", "=="]))
        conditions = (Condition(bound[0], op, Constant(str(draw(strategies.integers(0, 9))))),)
    return Rule(f"r{number}", atoms, Atom(f"h{number}", head), existentials, conditions)


@strategies.composite
def programs(draw):
    count = draw(strategies.integers(1, 4))
    generated = tuple(draw(rules(n)) for n in range(count))
    outputs = frozenset(rule.head.predicate for rule in generated[:1])
    return Program(generated, frozenset({"e", "f"}), outputs).validate()


@settings(max_examples=60, deadline=None)
@given(programs())
def test_print_then_parse_gives_back_the_program(program):
    assert parse(print_program(program)) == program


def generated_programs(count):
    """Generated programs over a grid of rule counts, seeds varying fastest."""
    grid = itertools.product([0, 1, 2], [0, 1, 2], [0, 1, 3], range(10))
    for harmful, recursive, conditions, seed in itertools.islice(grid, count):
        scenario = Scenario(
            input_output_sequences=[4, 4, 4],
            num_linear_rules=harmful + 3,
            num_existential_rules=harmful + 1,
            num_harmless_harmful_join_rules=1,
            num_harmful_harmful_join_rules=harmful,
            num_harmless_join_rules=8 - 2 * harmful,
            num_recursive_rules=recursive,
            num_conditions=conditions,
            seed=seed,
        )
        yield generate(scenario)[0]


@pytest.mark.slow
def test_generated_and_normalized_programs_read_back():
    checked = 0
    for program in generated_programs(250):
        normalized, _ = hje(program)
        for candidate in (program, normalized):
            text = print_program(candidate)
            assert parse(text) == candidate
            assert print_program(parse(text)) == text
            checked += 1
    assert checked == 500
