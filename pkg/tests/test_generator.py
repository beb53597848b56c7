"""Tests for scenarios, the program generator and its CSV data."""

import itertools
import time

import pytest

from wforge.analyzers import StructureAnalyzer
from wforge.chase import Verdict, equivalent, read_csv
from wforge.compatibility import ScenarioChecker, validate
from wforge.exceptions import EdbError, IncompatibleScenario
from wforge.functions.affectedness import affected_positions, dh_mdh, harmful_joins, is_warded
from wforge.functions.dialect import print_program
from wforge.generator import (
    CSV_STREAM,
    MAX_JOIN_GAP,
    Scenario,
    emit_edb,
    generate,
    measured_selectivity,
    plan_layout,
    random_database,
    rng_stream,
)
from wforge.manager import hje


def grid_scenario(harmful: int, recursive: int, conditions: int, seed: int = 0, kind: str = "direct") -> Scenario:
    """Three sequences of four rules; every count depends on the grid point."""
    return Scenario(
        input_output_sequences=[4, 4, 4],
        num_linear_rules=harmful + 3,
        num_existential_rules=harmful + 1,
        num_harmless_harmful_join_rules=1,
        num_harmful_harmful_join_rules=harmful,
        num_harmless_join_rules=8 - 2 * harmful,
        num_recursive_rules=recursive,
        recursion_kind=kind,
        num_conditions=conditions,
        seed=seed,
    )


GRID = list(itertools.product([0, 1, 2], [0, 1, 2], [0, 1, 3]))


class TestScenario:
    def test_defaults_are_compatible(self):
        assert validate(Scenario()) == Scenario()

    def test_violations_are_listed(self):
        scenario = Scenario(
            input_output_sequences=[2],
            num_linear_rules=1,
            num_existential_rules=2,
            num_harmful_harmful_join_rules=0,
        )
        check = ScenarioChecker(scenario).check_compatibility()
        assert not check.compatible
        assert [v["constraint"] for v in check.violations] == ["type-sum", "existential-linear"]
        assert check.to_dict()["compatible"] is False
        assert "existential-linear" in check.to_markdown()

    def test_harmful_joins_need_existentials(self):
        scenario = Scenario(input_output_sequences=[1], num_harmful_harmful_join_rules=1)
        with pytest.raises(IncompatibleScenario) as info:
            validate(scenario)
        assert "harm-source" in [c["constraint"] for c in info.value.constraints]

    def test_indirect_recursion_needs_pairs(self):
        scenario = Scenario(
            input_output_sequences=[3],
            num_linear_rules=1,
            num_harmless_join_rules=2,
            num_recursive_rules=1,
            recursion_kind="indirect",
        )
        with pytest.raises(IncompatibleScenario):
            validate(scenario)

    def test_layout_failure_is_reported(self):
        # a lone harmful join cannot start a sequence
        scenario = Scenario(
            input_output_sequences=[1, 1],
            num_linear_rules=1,
            num_existential_rules=1,
            num_harmful_harmful_join_rules=1,
        )
        with pytest.raises(IncompatibleScenario) as info:
            validate(scenario)
        assert info.value.constraints[0]["constraint"] == "layout"

    def test_unknown_keys(self):
        with pytest.raises(IncompatibleScenario) as info:
            Scenario.from_dict({"num_linear_rules": 1, "colour": "red"})
        assert info.value.constraints[0]["constraint"] == "unknown-key"

    def test_load_and_save(self, tmp_path):
        scenario = grid_scenario(1, 1, 1, seed=9)
        path = scenario.save(tmp_path / "s.toml")
        assert Scenario.load(path) == scenario

    def test_unreadable_scenario(self, tmp_path):
        with pytest.raises(EdbError):
            Scenario.load(tmp_path / "missing.toml")


class TestGenerator:
    @pytest.mark.parametrize("harmful,recursive,conditions", GRID)
    def test_requested_counts_are_measured(self, harmful, recursive, conditions):
        scenario = grid_scenario(harmful, recursive, conditions, seed=harmful * 9 + recursive * 3 + conditions)
        program, report = generate(scenario)
        counts = StructureAnalyzer(program).analyze()
        assert len(program.rules) == 12
        assert counts.linear_rules == scenario.num_linear_rules
        assert counts.harmless_joins == scenario.num_harmless_join_rules
        assert counts.harmless_harmful_joins == scenario.num_harmless_harmful_join_rules
        assert counts.harmful_harmful_joins == scenario.num_harmful_harmful_join_rules
        assert counts.existential_rules == scenario.num_existential_rules
        assert counts.recursive_rules == scenario.num_recursive_rules
        assert counts.conditions == scenario.num_conditions
        assert is_warded(program)[0]
        assert report.iterations == 12

    def test_indirect_recursion(self):
        scenario = Scenario(
            input_output_sequences=[4],
            num_linear_rules=1,
            num_harmless_join_rules=3,
            num_recursive_rules=2,
            recursion_kind="indirect",
        )
        program, _ = generate(scenario)
        assert StructureAnalyzer(program).analyze().recursive_rules == 2

    def test_outputs_and_binds(self):
        program, _ = generate(grid_scenario(0, 0, 0))
        assert len(program.outputs) == 3
        assert {bind.predicate for bind in program.binds} == set(program.inputs)
        assert all(bind.path == f"{bind.predicate}.csv" for bind in program.binds)

    def test_same_seed_same_program(self, tmp_path):
        scenario = grid_scenario(2, 1, 3, seed=4)
        first, _ = generate(scenario)
        second, _ = generate(scenario)
        assert print_program(first) == print_program(second)
        emit_edb(first, scenario, tmp_path / "a")
        emit_edb(second, scenario, tmp_path / "b")
        for path in sorted((tmp_path / "a").iterdir()):
            assert path.read_bytes() == (tmp_path / "b" / path.name).read_bytes()

    def test_different_seeds_differ(self):
        programs = {print_program(generate(grid_scenario(2, 2, 3, seed=seed))[0]) for seed in range(5)}
        assert len(programs) > 1

    def test_joins_follow_their_existential(self):
        gaps = []
        for seed in range(20):
            for kinds in plan_layout(grid_scenario(2, 2, 0, seed=seed)):
                source = None
                for index, kind in enumerate(kinds):
                    if kind == "existential":
                        source = index
                    elif kind in ("harmless_harmful_join", "harmful_harmful_join"):
                        assert source is not None
                        gaps.append(index - source - 1)
                        source = None
        assert max(gaps) <= MAX_JOIN_GAP
        assert 0 < max(gaps)

    def test_some_joins_have_indirect_causes(self):
        distances = []
        for (harmful, recursive, _), seed in itertools.product(GRID, range(2)):
            if not harmful:
                continue
            program, _ = generate(grid_scenario(harmful, recursive, 0, seed=seed))
            affected = affected_positions(program)
            for join in harmful_joins(program):
                distances.append(dh_mdh(program, program.rule(join.rule_id), affected).mdh)
        assert min(distances) >= 2
        assert max(distances) > 2

    def test_rng_streams_are_independent(self):
        first = rng_stream(3, CSV_STREAM, 0).integers(0, 1000, size=5)
        again = rng_stream(3, CSV_STREAM, 0).integers(0, 1000, size=5)
        other = rng_stream(3, CSV_STREAM, 1).integers(0, 1000, size=5)
        assert list(first) == list(again)
        assert list(first) != list(other)


class TestEdb:
    @pytest.mark.parametrize("selectivity", [0.1, 0.3, 0.5, 1.0])
    def test_join_tables_follow_selectivity(self, tmp_path, selectivity):
        scenario = Scenario(
            input_output_sequences=[3],
            num_linear_rules=1,
            num_harmless_join_rules=2,
            average_selectivity=selectivity,
            records_per_csv=1000,
        )
        program, report = generate(scenario)
        emit_edb(program, scenario, tmp_path, report)
        joins = [p for p in program.inputs if p.startswith("e")]
        assert joins
        keys = {row[0] for row in read_csv(tmp_path / "i1.csv")}
        for predicate in joins:
            rows = read_csv(tmp_path / f"{predicate}.csv")
            assert len(rows) == 1000
            joined = sum(1 for row in rows if row[0] in keys) / len(rows)
            assert abs(joined - selectivity) <= 0.05
            assert report.selectivity[predicate] == pytest.approx(joined)
        assert sorted(report.files) == sorted(f"{p}.csv" for p in program.inputs)

    def test_inputs_hold_every_key(self, tmp_path):
        scenario = Scenario(input_output_sequences=[1], num_linear_rules=1, records_per_csv=50)
        program, _ = generate(scenario)
        emit_edb(program, scenario, tmp_path)
        assert sorted(int(row[0]) for row in read_csv(tmp_path / "i1.csv")) == list(range(50))

    def test_measured_selectivity(self):
        rows = [("1", "0"), ("2", "0"), ("7", "0"), ("9", "0")]
        assert measured_selectivity(rows, [("1",), ("9",), ("4",)]) == 0.5
        assert measured_selectivity([], rows) == 0.0

    def test_random_database_is_small_and_deterministic(self):
        program, _ = generate(grid_scenario(1, 0, 0))
        database = random_database(program, 7, 2)
        assert database == random_database(program, 7, 2)
        assert set(database) == set(program.inputs)
        assert sum(len(rows) for rows in database.values()) <= 20


@pytest.mark.slow
def test_normalization_over_generated_scenarios():
    harmful_grid = [point for point in GRID if point[0] > 0]
    scenarios = [grid_scenario(*point, seed=seed) for point, seed in itertools.product(harmful_grid, range(6))]
    scenarios += [grid_scenario(harmful, 2, 1, seed=seed, kind="indirect") for harmful in (1, 2) for seed in range(4)]
    for scenario in scenarios:
        program, _ = generate(scenario)
        assert harmful_joins(program)
        normalized, _ = hje(program)
        assert harmful_joins(normalized) == []
        assert is_warded(normalized)[0]
    assert len(scenarios) >= 100


@pytest.mark.slow
def test_normalization_keeps_meaning_on_small_scenarios():
    for seed in range(50):
        scenario = Scenario(
            input_output_sequences=[3, 3],
            num_linear_rules=2,
            num_existential_rules=2,
            num_harmless_harmful_join_rules=1,
            num_harmful_harmful_join_rules=1,
            num_harmless_join_rules=2,
            seed=seed,
        )
        program, _ = generate(scenario)
        normalized, _ = hje(program)
        databases = [random_database(program, seed, n) for n in range(10)]
        verdicts = equivalent(program, normalized, databases)
        assert all(v.verdict == Verdict.EQUAL for v in verdicts), (seed, [v.to_dict() for v in verdicts])


@pytest.mark.slow
def test_generation_time_grows_polynomially():
    def elapsed(n):
        scenario = Scenario(input_output_sequences=[n], num_linear_rules=n // 2, num_harmless_join_rules=n // 2)
        best = float("inf")
        for _ in range(3):
            start = time.perf_counter()
            generate(scenario)
            best = min(best, time.perf_counter() - start)
        return best

    times = [elapsed(n) for n in (100, 200, 400)]
    assert times[1] <= 8 * times[0]
    assert times[2] <= 8 * times[1]
