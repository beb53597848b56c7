"""Scenario compatibility checking for the program generator."""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List

from .exceptions import IncompatibleScenario

if TYPE_CHECKING:
    from .generator import Scenario

RECURSION_KINDS = ("direct", "indirect")


@dataclass
class CompatibilityCheck:
    """Results of a compatibility check."""

    scenario: "Scenario"
    violations: List[Dict[str, str]] = field(default_factory=list)

    @property
    def compatible(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON output."""
        return {
            "compatible": self.compatible,
            "total_rules": sum(self.scenario.input_output_sequences),
            "violations": self.violations,
        }

    def to_markdown(self) -> str:
        """Convert to markdown format."""
        lines = [
            "# Scenario Compatibility Check\n",
            f"- Sequences: {', '.join(str(n) for n in self.scenario.input_output_sequences) or 'none'}",
            f"- Compatible: {'Yes' if self.compatible else 'No'}\n",
        ]
        if self.violations:
            lines.extend([
                "## Violated Constraints",
                *[f"- {v['constraint']}: {v['detail']}" for v in self.violations],
                "",
            ])
        return "\n".join(lines)


class ScenarioChecker:
    """Checks that scenario parameters can be satisfied together.

    Every check is arithmetic over the counts except the last one, which
    dry-runs the sequence layout.
    """

    def __init__(self, scenario: "Scenario"):
        self.scenario = scenario

    def _violation(self, violations: List[Dict[str, str]], constraint: str, detail: str) -> None:
        violations.append({"constraint": constraint, "detail": detail})

    def check_compatibility(self) -> CompatibilityCheck:
        s = self.scenario
        violations: List[Dict[str, str]] = []
        counts = {
            "num_linear_rules": s.num_linear_rules,
            "num_harmless_join_rules": s.num_harmless_join_rules,
            "num_harmless_harmful_join_rules": s.num_harmless_harmful_join_rules,
            "num_harmful_harmful_join_rules": s.num_harmful_harmful_join_rules,
            "num_existential_rules": s.num_existential_rules,
            "num_recursive_rules": s.num_recursive_rules,
            "num_conditions": s.num_conditions,
        }
        negative = [name for name, value in counts.items() if value < 0]
        if negative or any(n < 0 for n in s.input_output_sequences):
            self._violation(violations, "non-negative", f"negative values: {', '.join(negative) or 'sequence length'}")
        if not s.input_output_sequences:
            self._violation(violations, "sequences", "at least one input-output sequence is required")

        total = sum(s.input_output_sequences)
        typed = (
            s.num_linear_rules
            + s.num_harmless_join_rules
            + s.num_harmless_harmful_join_rules
            + s.num_harmful_harmful_join_rules
        )
        if typed != total:
            self._violation(violations, "type-sum", f"rule types sum to {typed}, sequences to {total}")
        if s.num_existential_rules > s.num_linear_rules:
            self._violation(
                violations,
                "existential-linear",
                f"{s.num_existential_rules} existential rules but only {s.num_linear_rules} linear rules",
            )
        harmful = s.num_harmless_harmful_join_rules + s.num_harmful_harmful_join_rules
        if s.num_existential_rules < harmful:
            self._violation(
                violations,
                "harm-source",
                f"{harmful} joins over affected positions need as many existential rules, got {s.num_existential_rules}",
            )
        if s.num_recursive_rules > s.num_harmless_join_rules:
            self._violation(
                violations,
                "recursion-budget",
                f"{s.num_recursive_rules} recursive rules exceed {s.num_harmless_join_rules} harmless joins",
            )
        if s.recursion_kind not in RECURSION_KINDS:
            self._violation(violations, "recursion-kind", f"unknown recursion kind {s.recursion_kind!r}")
        elif s.recursion_kind == "indirect" and s.num_recursive_rules % 2:
            self._violation(violations, "recursion-kind", "indirect recursion needs an even number of rules")
        if not 0 < s.average_selectivity <= 1:
            self._violation(violations, "selectivity", f"{s.average_selectivity} is outside (0, 1]")
        if s.records_per_csv < 1:
            self._violation(violations, "records", "records_per_csv must be at least 1")
        if s.num_conditions > 0 and total == 0:
            self._violation(violations, "conditions", "conditions need at least one rule")

        if not violations:
            from .generator import plan_layout

            try:
                plan_layout(s)
            except IncompatibleScenario as e:
                violations.extend(e.constraints)
        return CompatibilityCheck(scenario=s, violations=violations)


def validate(scenario: "Scenario") -> "Scenario":
    """Return ``scenario`` unchanged if compatible.

    Raises:
        IncompatibleScenario: listing every violated constraint.
    """
    check = ScenarioChecker(scenario).check_compatibility()
    if not check.compatible:
        raise IncompatibleScenario(check.violations)
    return scenario
