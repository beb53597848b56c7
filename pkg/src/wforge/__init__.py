"""wforge - generate, analyze and normalize Warded Datalog+/- programs."""

from .analyzers import AffectednessReport, ProgramAnalyzer, StructureAnalyzer, WardedAnalyzer
from .chase import ChaseInstance, Fact, Verdict, chase, equivalent, load_edb
from .functions.dialect import parse, parse_file, print_program
from .generator import Scenario, emit_edb, generate, random_database
from .hutree import HUTree, back_composition
from .manager import NormalizationManager, hje
from .rulespec import Atom, Constant, LabeledNull, Program, Rule, Variable

__version__ = "0.1.0"
__all__ = [
    "AffectednessReport",
    "Atom",
    "ChaseInstance",
    "Constant",
    "Fact",
    "HUTree",
    "LabeledNull",
    "NormalizationManager",
    "Program",
    "ProgramAnalyzer",
    "Rule",
    "Scenario",
    "StructureAnalyzer",
    "Variable",
    "Verdict",
    "WardedAnalyzer",
    "back_composition",
    "chase",
    "emit_edb",
    "equivalent",
    "generate",
    "hje",
    "load_edb",
    "parse",
    "parse_file",
    "print_program",
    "random_database",
]
