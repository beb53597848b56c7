"""Parser and printer for the ``.vada`` rule dialect.

Grammar summary::

    @input e
    @output p
    @bind e "csv" "data/e.csv"
    r1: p(X, ?Z) :- e(X, Y), Y > 3.   # rule ids are optional

``?Z`` marks an existential head variable, ``#`` starts a line comment.
"""

import re
from pathlib import Path
from typing import List, Tuple, Union

import lark

from ..exceptions import DialectSyntaxError, ProgramError, UnsafeRule
from ..rulespec import Atom, Bind, Condition, Constant, Program, Rule, SkolemTerm, Term, Variable

GRAMMAR = r"""
    start: statement*

    ?statement: annotation
              | rule

    annotation: "@input" NAME                 -> input_annotation
              | "@output" NAME                -> output_annotation
              | "@bind" NAME STRING STRING    -> bind_annotation

    rule: [NAME ":"] atoms ":-" body "."
    atoms: atom ("," atom)*
    body: literal ("," literal)*

    ?literal: atom
            | condition

    atom: NAME "(" [term ("," term)*] ")"
    condition: operand OP operand

    ?operand: VAR          -> variable
            | constant

    ?term: VAR             -> variable
         | "?" VAR         -> existential
         | NAME "(" [term ("," term)*] ")"   -> skolem
         | constant

    constant: INT | NAME | STRING

    OP: "<=" | ">=" | "!=" | "==" | "<" | ">"
    VAR: /[A-Z][A-Za-z0-9_]*/
    NAME: /[a-z][A-Za-z0-9_]*/
    INT: /-?\d+/
    STRING: /"(\\.|[^"\\])*"/
    COMMENT: /#[^\n]*/

    %import common.WS
    %ignore WS
    %ignore COMMENT
"""


def _unquote(token: str) -> str:
    return re.sub(r"\\(.)", r"\1", token[1:-1])


def _quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


class _Existential:
    """Head-only marker produced for ``?X`` before rule assembly."""

    def __init__(self, name: str):
        self.name = name


class _ProgramBuilder(lark.Transformer):
    """Turn the parse tree into rulespec values."""

    def variable(self, children):
        return Variable(str(children[0]))

    def existential(self, children):
        return _Existential(str(children[0]))

    def constant(self, children):
        token = children[0]
        if token.type == "STRING":
            return Constant(_unquote(str(token)))
        return Constant(str(token))

    def skolem(self, children):
        name, *args = children
        return SkolemTerm(str(name), tuple(a for a in args if a is not None))

    def atom(self, children):
        name, *terms = children
        return Atom(str(name), tuple(t for t in terms if t is not None))

    def condition(self, children):
        left, op, right = children
        return Condition(left, str(op), right)

    def atoms(self, children):
        return list(children)

    def body(self, children):
        return list(children)

    def rule(self, children):
        label, heads, literals = children
        if len(heads) != 1:
            raise ProgramError("Multi-atom heads are not supported")
        head = heads[0]
        existentials = set()
        terms = []
        for term in head.terms:
            if isinstance(term, _Existential):
                existentials.add(term.name)
                terms.append(Variable(term.name))
            else:
                terms.append(term)
        body = []
        conditions = []
        for literal in literals:
            if isinstance(literal, Condition):
                conditions.append(literal)
                continue
            if any(isinstance(t, _Existential) for t in literal.terms):
                raise UnsafeRule(f"Existential marker used in the body of {literal.predicate}")
            body.append(literal)
        if not body:
            raise ProgramError("A rule needs at least one body atom")
        return Rule(
            id=str(label) if label is not None else "",
            body=tuple(body),
            head=Atom(head.predicate, tuple(terms)),
            existentials=frozenset(existentials),
            conditions=tuple(conditions),
        )

    def input_annotation(self, children):
        return ("input", str(children[0]))

    def output_annotation(self, children):
        return ("output", str(children[0]))

    def bind_annotation(self, children):
        name, fmt, path = children
        return ("bind", Bind(str(name), _unquote(str(fmt)), _unquote(str(path))))

    def start(self, children):
        rules: List[Rule] = []
        inputs, outputs, binds = set(), set(), []
        for item in children:
            if isinstance(item, Rule):
                rules.append(item)
            elif item[0] == "input":
                inputs.add(item[1])
            elif item[0] == "output":
                outputs.add(item[1])
            else:
                binds.append(item[1])
        return Program(
            rules=_label(rules),
            inputs=frozenset(inputs),
            outputs=frozenset(outputs),
            binds=frozenset(binds),
        )


def _label(rules: List[Rule]) -> Tuple[Rule, ...]:
    """Name unlabeled rules ``r<position>``, skipping ids already in use."""
    taken = {rule.id for rule in rules if rule.id}
    labeled = []
    for position, rule in enumerate(rules, start=1):
        if not rule.id:
            number = position
            while f"r{number}" in taken:
                number += 1
            taken.add(f"r{number}")
            rule = rule.with_id(f"r{number}")
        labeled.append(rule)
    return tuple(labeled)


parser = lark.Lark(GRAMMAR, parser="lalr")


def parse(text: str) -> Program:
    """Parse dialect source into a validated Program.

    Raises:
        DialectSyntaxError: malformed text, with line and column.
        ArityMismatch, UnsafeRule, ProgramError: invariant violations.
    """
    try:
        tree = parser.parse(text)
    except lark.exceptions.UnexpectedInput as e:
        raise DialectSyntaxError(_describe(e), getattr(e, "line", None), getattr(e, "column", None)) from e
    try:
        program = _ProgramBuilder().transform(tree)
    except lark.exceptions.VisitError as e:
        # transformer callbacks raise domain errors; surface them unwrapped
        raise e.orig_exc from e
    return program.validate()


def parse_file(path: Union[str, Path]) -> Program:
    return parse(Path(path).read_text(encoding="utf-8"))


def _describe(error: lark.exceptions.UnexpectedInput) -> str:
    if isinstance(error, lark.exceptions.UnexpectedToken):
        return f"unexpected token {error.token!r}"
    if isinstance(error, lark.exceptions.UnexpectedCharacters):
        return f"unexpected character {error.char!r}"
    return "unexpected end of input"


def format_term(term: Term, existentials: frozenset = frozenset()) -> str:
    if isinstance(term, Variable) and term.name in existentials:
        return f"?{term.name}"
    return str(term)


def format_rule(rule: Rule, with_id: bool = True) -> str:
    head_terms = ", ".join(format_term(t, rule.existentials) for t in rule.head.terms)
    head = f"{rule.head.predicate}({head_terms})"
    literals = [str(atom) for atom in rule.body] + [str(cond) for cond in rule.conditions]
    text = f"{head} :- {', '.join(literals)}."
    return f"{rule.id}: {text}" if with_id and rule.id else text


def print_program(program: Program) -> str:
    """Deterministic canonical text; annotations first, then rules in order."""
    lines = [f"@input {p}" for p in sorted(program.inputs)]
    lines += [f"@output {p}" for p in sorted(program.outputs)]
    for bind in sorted(program.binds, key=lambda b: (b.predicate, b.format, b.path)):
        lines.append(f"@bind {bind.predicate} {_quote(bind.format)} {_quote(bind.path)}")
    lines += [format_rule(rule) for rule in program.rules]
    return "\n".join(lines) + "\n" if lines else ""


def write_program(program: Program, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(print_program(program), encoding="utf-8")
    return path
