"""Text and JSON formats for knowledge bases and queries.

The ``.rwkb`` format, one statement per ``;``::

    # comments run to end of line
    pred Apartment;
    pred Mistress curried "Mistress(x, John)";
    const Jane;
    rule forall x: Copy(x) => Access(x);
    stat ||Murderer(x) | Apartment(x) & Mistress(x)||x ~= 0.6;
    stat ||Murderer(x) | Mistress(x)||x <=~ 1/20 tol 1;
    fact Apartment(Jane);
    fact not Access(xd);

``true`` is the empty conjunction, and a statistic's condition may be
omitted. Relations are ``~=`` (approximately), ``<=~`` and ``>=~``.
Numbers are decimals or fractions and are stored exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import lark
from lark import Lark, Token, Tree

from randworlds.errors import KBParseError, KBValidationError, UnknownSymbolError
from randworlds.logging_config import get_logger
from randworlds.models import (
    Conjunction,
    Constant,
    GroundFact,
    KnowledgeBase,
    Literal,
    ParseError,
    PredicateSymbol,
    ProportionConstraint,
    Query,
    Relation,
    SourceMap,
    SourceSpan,
    UniversalRule,
    to_fraction,
    validate_kb,
)

logger = get_logger()

GRAMMAR = r"""
kb: _statement*
_statement: pred_decl | const_decl | fact | rule | stat

pred_decl: "pred" NAME ["curried" ESCAPED_STRING] ";"
const_decl: "const" NAME ";"
fact: "fact" [NOT] NAME "(" NAME ")" ";"
rule: "rule" "forall" "x" ":" conj "=>" conj ";"
stat: "stat" "||" conj ["|" conj] "||" "x" RELATION NUMBER ["tol" NUMBER] ";"

conj: TRUE | lit ("&" lit)*
lit: [NOT] NAME "(" "x" ")"

query: glit ("&" glit)*
glit: [NOT] NAME "(" NAME ")"

NOT: "not"
TRUE: "true"
RELATION: "~=" | "<=~" | ">=~"
NAME: /[A-Za-z_][A-Za-z0-9_]*/
NUMBER: /\d+(\.\d+|\/\d+)?/
COMMENT: /#[^\n]*/

%import common.ESCAPED_STRING
%import common.WS
%ignore WS
%ignore COMMENT
"""

_RELATIONS = {"~=": Relation.APPROX, "<=~": Relation.AT_MOST, ">=~": Relation.AT_LEAST}
_MAX_ERRORS = 50

_parser = Lark(
    GRAMMAR,
    start=["kb", "query"],
    parser="lalr",
    propagate_positions=True,
    maybe_placeholders=True,
)


def _span(text: str, begin: int, end: int) -> SourceSpan:
    """Span for character offsets ``[begin, end)``, reported in UTF-8 byte offsets."""
    begin = max(0, min(begin, len(text)))
    end = max(begin, min(end, len(text)))
    line = text.count("\n", 0, begin) + 1
    column = begin - (text.rfind("\n", 0, begin) + 1) + 1
    return SourceSpan(
        begin=len(text[:begin].encode()),
        end=len(text[:end].encode()),
        line=line,
        column=column,
    )


def _node_span(text: str, node: Tree | Token) -> SourceSpan:
    if isinstance(node, Token):
        return _span(text, node.start_pos or 0, node.end_pos or 0)
    return _span(text, node.meta.start_pos, node.meta.end_pos)


def _syntax_error(text: str, error: lark.exceptions.UnexpectedInput) -> tuple[ParseError, int]:
    """Convert a lark error to a ParseError; also return the character offset."""
    pos = getattr(error, "pos_in_stream", None)
    if pos is None or pos < 0:
        pos = len(text)
    expected: set[str] = set()
    if isinstance(error, lark.exceptions.UnexpectedToken):
        expected = set(error.expected)
        found = error.token.value if error.token.type != "$END" else "end of input"
        message = f"unexpected {found!r}"
        end = pos + len(str(error.token.value)) if error.token.type != "$END" else pos
    elif isinstance(error, lark.exceptions.UnexpectedCharacters):
        expected = set(error.allowed or ())
        message = f"unexpected character {text[pos]!r}" if pos < len(text) else "unexpected end of input"
        end = pos + 1
    else:
        expected = set(getattr(error, "expected", ()) or ())
        message = "unexpected end of input"
        end = pos
    return ParseError(span=_span(text, pos, end), message=message, expected=tuple(sorted(expected))), pos


def _blank_statement(text: str, pos: int) -> str:
    """Replace the statement around ``pos`` with spaces, keeping newlines."""
    start = text.rfind(";", 0, pos) + 1
    stop = text.find(";", pos)
    stop = len(text) if stop < 0 else stop + 1
    blanked = "".join("\n" if ch == "\n" else " " for ch in text[start:stop])
    return text[:start] + blanked + text[stop:]


def _parse_tree(text: str, start: str) -> Tree:
    """Parse with statement-level recovery, collecting every syntax error."""
    errors: list[ParseError] = []
    working = text
    while True:
        try:
            tree = _parser.parse(working, start=start)
        except lark.exceptions.UnexpectedInput as e:
            error, pos = _syntax_error(text, e)
            errors.append(error)
            if start != "kb" or len(errors) >= _MAX_ERRORS:
                break
            recovered = _blank_statement(working, pos)
            if recovered == working:
                break
            working = recovered
            continue
        if not errors:
            return tree
        break
    raise KBParseError(errors)


def _literal(node: Tree) -> Literal:
    neg, name = node.children[0], node.children[1]
    return Literal(predicate=str(name), negated=neg is not None)


def _conjunction(node: Tree | None) -> Conjunction:
    if node is None:
        return Conjunction()
    literals = [c for c in node.children if isinstance(c, Tree)]
    return Conjunction(literals=tuple(_literal(c) for c in literals))


def _number(text: str, token: Token) -> Any:
    try:
        return to_fraction(str(token))
    except ValueError:
        raise KBParseError(
            [ParseError(span=_node_span(text, token), message=f"not a number: {token}")]
        ) from None


def parse_kb(text: str) -> KnowledgeBase:
    """
    Parse ``.rwkb`` text into a validated knowledge base.

    Args:
        text: Knowledge-base source

    Returns:
        KnowledgeBase carrying a source map of element spans

    Raises:
        KBParseError: With every syntax error found (statement-level recovery)
        KBValidationError: If the text parses but the KB is not well-formed
    """
    tree = _parse_tree(text, "kb")

    predicates: list[PredicateSymbol] = []
    constants: list[Constant] = []
    rules: list[UniversalRule] = []
    constraints: list[ProportionConstraint] = []
    facts: list[GroundFact] = []
    spans: dict[str, SourceSpan] = {}

    for node in tree.children:
        span = _node_span(text, node)
        kind = node.data
        if kind == "pred_decl":
            name, note = node.children
            curried = json.loads(str(note)) if note is not None else None
            predicates.append(PredicateSymbol(name=str(name), curried_from=curried))
            spans.setdefault(f"pred:{name}", span)
        elif kind == "const_decl":
            (name,) = node.children
            constants.append(Constant(name=str(name)))
            spans.setdefault(f"const:{name}", span)
        elif kind == "fact":
            neg, pred, const = node.children
            spans[f"fact:{len(facts)}"] = span
            facts.append(
                GroundFact(constant=str(const), literal=Literal(predicate=str(pred), negated=neg is not None))
            )
        elif kind == "rule":
            antecedent, consequent = node.children
            spans[f"rule:{len(rules)}"] = span
            rules.append(UniversalRule(antecedent=_conjunction(antecedent), consequent=_conjunction(consequent)))
        elif kind == "stat":
            target, condition, relation, value, tol = node.children
            index = 0
            if tol is not None:
                tol_value = _number(text, tol)
                if tol_value.denominator != 1:
                    raise KBParseError(
                        [ParseError(span=_node_span(text, tol), message=f"tolerance index must be an integer, got {tol}")]
                    )
                index = int(tol_value)
            key = f"constraint:{len(constraints)}"
            spans[key] = span
            spans[f"{key}:value"] = _node_span(text, value)
            constraints.append(
                ProportionConstraint(
                    target=_conjunction(target),
                    condition=_conjunction(condition),
                    relation=_RELATIONS[str(relation)],
                    value=_number(text, value),
                    tolerance_index=index,
                )
            )

    kb = KnowledgeBase(
        predicates=tuple(predicates),
        constants=tuple(constants),
        rules=tuple(rules),
        constraints=tuple(constraints),
        facts=tuple(facts),
        source_map=SourceMap(spans=spans),
    )
    report = validate_kb(kb)
    if not report.ok:
        raise KBValidationError(report)
    logger.debug(
        f"Parsed KB: {len(kb.predicates)} predicates, {len(kb.constants)} constants, "
        f"{len(kb.rules)} rules, {len(kb.constraints)} constraints, {len(kb.facts)} facts"
    )
    return kb


def parse_query(text: str, kb: KnowledgeBase | None = None) -> Query:
    """
    Parse a ground query such as ``Copy(xd)`` or ``not Access(xd) & Striking(xd)``.

    Args:
        text: Query source
        kb: Knowledge base used to resolve symbols (skipped when None)

    Returns:
        Query over a single constant

    Raises:
        KBParseError: On syntax errors, or when literals name different constants
        UnknownSymbolError: If a predicate or constant is not declared in ``kb``
    """
    tree = _parse_tree(text, "query")
    constants = {str(g.children[2]) for g in tree.children}
    if len(constants) != 1:
        raise KBParseError(
            [ParseError(span=_span(text, 0, len(text)), message="a query must mention exactly one constant")]
        )
    (constant,) = constants
    literals = tuple(
        Literal(predicate=str(g.children[1]), negated=g.children[0] is not None) for g in tree.children
    )
    if kb is not None:
        if constant not in kb.constant_names:
            raise UnknownSymbolError("constant", constant)
        for lit in literals:
            if lit.predicate not in kb.predicate_names:
                raise UnknownSymbolError("predicate", lit.predicate)
    return Query(constant=constant, target=Conjunction(literals=literals))


def _render_conjunction(conj: Conjunction) -> str:
    return conj.render("x")


def print_kb(kb: KnowledgeBase) -> str:
    """
    Render a knowledge base as canonical ``.rwkb`` text.

    Declarations come first (alphabetical), then rules, statistics and facts
    in KB order, so ``parse_kb(print_kb(kb)) == kb``.
    """
    lines: list[str] = []
    for pred in kb.predicates:
        note = f" curried {json.dumps(pred.curried_from)}" if pred.curried_from else ""
        lines.append(f"pred {pred.name}{note};")
    lines.extend(f"const {c.name};" for c in kb.constants)
    for rule in kb.rules:
        lines.append(
            f"rule forall x: {_render_conjunction(rule.antecedent)} => {_render_conjunction(rule.consequent)};"
        )
    for c in kb.constraints:
        condition = "" if c.condition.is_truth else f" | {_render_conjunction(c.condition)}"
        tol = f" tol {c.tolerance_index}" if c.tolerance_index else ""
        lines.append(
            f"stat ||{_render_conjunction(c.target)}{condition}||x {c.relation.symbol} {c.value}{tol};"
        )
    lines.extend(f"fact {f.literal.render(f.constant)};" for f in kb.facts)
    return "\n".join(lines) + ("\n" if lines else "")


def read_kb(path: str | Path) -> KnowledgeBase:
    """Read and parse a UTF-8 ``.rwkb`` file."""
    text = Path(path).read_text(encoding="utf-8")
    logger.info(f"Read knowledge base from {path}")
    return parse_kb(text)


def kb_to_json(kb: KnowledgeBase) -> str:
    """Serialize a KB to stable JSON (field names mirror the model)."""
    return json.dumps(kb.to_dict(), indent=2, sort_keys=True)


def kb_from_json(text: str) -> KnowledgeBase:
    """Inverse of :func:`kb_to_json`."""
    return KnowledgeBase.model_validate(json.loads(text))


def query_to_json(query: Query) -> str:
    return json.dumps(query.model_dump(mode="json"), indent=2, sort_keys=True)


def query_from_json(text: str) -> Query:
    return Query.model_validate(json.loads(text))
