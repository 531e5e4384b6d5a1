"""ShExC reader/writer for the benchmark subset.

Supported surface: PREFIX declarations, an optional ``start = @<Label>``
directive (first shape otherwise), shape declarations with EXTRA, triple
constraints ``predicate nodeConstraint cardinality?`` separated by ';',
node constraints ``IRI`` / datatype IRI / ``[ v1 v2 ]`` / ``@<Label>``,
cardinalities ``? * + {m} {m,n} {m,}``, and ``#`` comments.  Everything else
is reported as a diagnostic; the parser never crashes on any input.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum

from .model import (
    RDF_TYPE,
    XSD_NS,
    Cardinality,
    DatatypeConstraint,
    Iri,
    Literal,
    NodeConstraint,
    NodeKindIri,
    Schema,
    Shape,
    ShapeRef,
    TripleConstraint,
    ValueSet,
    canonicalize,
    compact_iri,
    infer_focus_class,
    render_value,
)


class DiagnosticKind(Enum):
    SYNTAX = "syntax"
    UNSUPPORTED_FEATURE = "unsupported_feature"
    DUPLICATE_PREDICATE = "duplicate_predicate"
    DANGLING_REF = "dangling_ref"


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    message: str
    kind: DiagnosticKind = DiagnosticKind.SYNTAX

    def __str__(self) -> str:
        return f"line {self.line} col {self.column}: {self.message}"


class ShexcParseError(ValueError):
    """Raised when a source text cannot be parsed into a schema."""

    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = tuple(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics) or "parse failed")


_UNSUPPORTED_KEYWORDS = {
    "base", "import", "closed", "and", "or", "not", "abstract", "external",
    "bnode", "literal", "nonliteral", "minlength", "maxlength", "length",
    "pattern", "mininclusive", "maxinclusive", "minexclusive", "maxexclusive",
    "totaldigits", "fractiondigits",
}

_TOKEN_SPEC = [
    ("WS", r"[ \t\r\f]+"),
    ("NL", r"\n"),
    ("COMMENT", r"#[^\n]*"),
    ("IRIREF", r"<[^<>\"{}|^`\\\s]*>"),
    ("DTCARET", r"\^\^"),
    ("STRING", r'"(?:[^"\\\n]|\\.)*"'),
    ("PNAME", r"[A-Za-z][A-Za-z0-9_.\-]*:[A-Za-z0-9_.\-]*|:[A-Za-z0-9_.\-]+"),
    ("NUMBER", r"[+-]?\d+(?:\.\d+)?"),
    ("LANGTAG", r"@[A-Za-z]+(?:-[A-Za-z0-9]+)*"),
    ("AT", r"@"),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_\-]*"),
    ("PUNCT", r"[{}\[\];=,?*+()./|~!$&%-]"),
]
_MASTER_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_SPEC))


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    line: int
    col: int


_EOF = _Token("EOF", "", 0, 0)


def _tokenize(text: str) -> tuple[list[_Token], list[ParseDiagnostic]]:
    tokens: list[_Token] = []
    diagnostics: list[ParseDiagnostic] = []
    line, col, pos = 1, 1, 0
    while pos < len(text):
        match = _MASTER_RE.match(text, pos)
        if match is None:
            diagnostics.append(ParseDiagnostic(line, col, f"unexpected character {text[pos]!r}"))
            pos += 1
            col += 1
            continue
        kind = match.lastgroup or ""
        value = match.group()
        if kind == "NL":
            line += 1
            col = 1
        elif kind in ("WS", "COMMENT"):
            col += len(value)
        else:
            tokens.append(_Token(kind, value, line, col))
            col += len(value)
        pos = match.end()
    tokens.append(_Token("EOF", "", line, col))
    return tokens, diagnostics


_XSD_INTEGER = Iri(XSD_NS + "integer")
_XSD_DECIMAL = Iri(XSD_NS + "decimal")
_XSD_BOOLEAN = Iri(XSD_NS + "boolean")


class _Parser:
    def __init__(self, text: str):
        self.tokens, self.diagnostics = _tokenize(text)
        self.pos = 0
        self.prefixes: dict[str, str] = {}

    # -- token plumbing ----------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        index = self.pos + ahead
        return self.tokens[index] if index < len(self.tokens) else _EOF

    def advance(self) -> _Token:
        token = self.peek()
        if token.kind != "EOF":
            self.pos += 1
        return token

    def error(self, token: _Token, message: str, kind: DiagnosticKind = DiagnosticKind.SYNTAX) -> None:
        self.diagnostics.append(ParseDiagnostic(token.line, token.col, message, kind))

    def skip_until(self, *stop_values: str) -> None:
        while self.peek().kind != "EOF" and self.peek().value not in stop_values:
            self.advance()

    # -- grammar -----------------------------------------------------------

    def parse(self) -> Schema:
        start_ref: str | None = None
        shape_order: list[str] = []
        shapes: dict[str, Shape] = {}
        ref_sites: list[tuple[str, _Token]] = []

        while self.peek().kind != "EOF":
            token = self.peek()
            word = token.value.lower() if token.kind == "IDENT" else ""
            if word == "prefix":
                self.advance()
                self._parse_prefix_decl(token)
            elif word == "start":
                self.advance()
                start_ref = self._parse_start_directive(token)
            elif word in _UNSUPPORTED_KEYWORDS:
                self.advance()
                self.error(token, f"'{token.value}' is outside the supported ShEx subset",
                           DiagnosticKind.UNSUPPORTED_FEATURE)
                self.skip_until("{", "<")
            elif token.kind == "IRIREF":
                parsed = self._parse_shape_decl(ref_sites)
                if parsed is not None:
                    label, shape = parsed
                    if label in shapes:
                        self.error(token, f"shape <{label}> is declared twice")
                    else:
                        shapes[label] = shape
                        shape_order.append(label)
            else:
                self.error(token, f"expected a directive or shape declaration, found {token.value!r}")
                self.advance()

        if not shapes:
            self.error(self.peek(), "no shape declarations found")
        if start_ref is not None and start_ref not in shapes and shapes:
            self.error(self.tokens[0], f"start shape <{start_ref}> is not declared",
                       DiagnosticKind.DANGLING_REF)
            start_ref = None
        for label, site in ref_sites:
            if label not in shapes:
                self.error(site, f"shape reference @<{label}> is undefined", DiagnosticKind.DANGLING_REF)

        if self.diagnostics:
            raise ShexcParseError(self.diagnostics)

        start = start_ref or shape_order[0]
        schema = Schema(prefixes=dict(self.prefixes), start_label=start, shapes=shapes)
        focus = infer_focus_class(schema)
        if focus is not None:
            schema = Schema(prefixes=dict(self.prefixes), start_label=start, shapes=shapes, focus_class=focus)
        return schema

    def _parse_prefix_decl(self, at: _Token) -> None:
        name = self.peek()
        if name.kind != "PNAME" or not name.value.endswith(":"):
            self.error(name if name.kind != "EOF" else at, "expected 'prefix:' after PREFIX")
            self.skip_until("<")
        else:
            self.advance()
        iri = self.peek()
        if iri.kind != "IRIREF":
            self.error(iri if iri.kind != "EOF" else at, "expected <iri> in PREFIX declaration")
            return
        self.advance()
        if name.kind == "PNAME" and name.value.endswith(":"):
            self.prefixes[name.value[:-1]] = iri.value[1:-1]

    def _parse_start_directive(self, at: _Token) -> str | None:
        if self.peek().value != "=":
            self.error(self.peek(), "expected '=' after start")
            return None
        self.advance()
        if self.peek().kind != "AT" or self.peek(1).kind != "IRIREF":
            self.error(self.peek(), "expected @<Label> after start =")
            return None
        self.advance()
        label = self.advance().value[1:-1]
        return label

    def _parse_shape_decl(self, ref_sites: list[tuple[str, _Token]]) -> tuple[str, Shape] | None:
        decl = self.advance()
        label = decl.value[1:-1]
        if not label:
            self.error(decl, "empty shape label")
            label = "_"

        extra: list[Iri] = []
        while True:
            token = self.peek()
            if token.kind == "IDENT" and token.value.lower() == "extra":
                self.advance()
                while self.peek().kind in ("PNAME", "IRIREF") or (
                    self.peek().kind == "IDENT" and self.peek().value == "a"
                ):
                    predicate = self._parse_iri(self.advance())
                    if predicate is not None:
                        extra.append(predicate)
            elif token.kind == "IDENT" and token.value.lower() in _UNSUPPORTED_KEYWORDS:
                self.advance()
                self.error(token, f"'{token.value}' is outside the supported ShEx subset",
                           DiagnosticKind.UNSUPPORTED_FEATURE)
            else:
                break

        if self.peek().value != "{":
            self.error(self.peek(), "expected '{' to open the shape body")
            self.skip_until("{", "<")
            if self.peek().value != "{":
                return None
        self.advance()

        constraints: list[TripleConstraint] = []
        seen_predicates: set[Iri] = set()
        while True:
            token = self.peek()
            if token.value == "}":
                self.advance()
                break
            if token.kind == "EOF":
                self.error(token, f"unexpected end of input inside shape <{label}>")
                break
            parsed = self._parse_triple_constraint(ref_sites)
            if parsed is None:
                self.skip_until(";", "}")
            else:
                constraint, site = parsed
                if constraint.predicate in seen_predicates:
                    self.error(site, f"duplicate predicate {constraint.predicate} in shape <{label}>",
                               DiagnosticKind.DUPLICATE_PREDICATE)
                else:
                    seen_predicates.add(constraint.predicate)
                    constraints.append(constraint)
            if self.peek().value == ";":
                self.advance()
            elif self.peek().value != "}" and self.peek().kind != "EOF":
                self.error(self.peek(), f"expected ';' or '}}' after constraint, found {self.peek().value!r}")
                self.skip_until(";", "}")
                if self.peek().value == ";":
                    self.advance()

        if not constraints:
            self.error(decl, f"shape <{label}> declares no constraints")
            return None
        try:
            return label, Shape(label, tuple(constraints), tuple(extra))
        except ValueError as exc:
            self.error(decl, str(exc))
            return None

    def _parse_iri(self, token: _Token) -> Iri | None:
        if token.kind == "IRIREF":
            try:
                return Iri(token.value[1:-1])
            except ValueError as exc:
                self.error(token, str(exc))
                return None
        if token.kind == "IDENT" and token.value == "a":
            return RDF_TYPE
        if token.kind == "PNAME":
            prefix = token.value.split(":", 1)[0]
            if prefix not in self.prefixes:
                self.error(token, f"undeclared prefix {prefix!r}")
                return None
            local = token.value.split(":", 1)[1]
            return Iri(self.prefixes[prefix] + local)
        self.error(token, f"expected an IRI, found {token.value!r}")
        return None

    def _parse_triple_constraint(
        self, ref_sites: list[tuple[str, _Token]]
    ) -> tuple[TripleConstraint, _Token] | None:
        site = self.peek()
        if site.kind not in ("PNAME", "IRIREF") and not (site.kind == "IDENT" and site.value == "a"):
            self.error(site, f"expected a predicate, found {site.value!r}")
            return None
        predicate = self._parse_iri(self.advance())
        if predicate is None:
            return None
        node = self._parse_node_constraint(ref_sites)
        if node is None:
            return None
        cardinality = self._parse_cardinality()
        trailing = self.peek()
        if trailing.kind == "IDENT" and trailing.value.lower() in _UNSUPPORTED_KEYWORDS:
            self.error(trailing, f"'{trailing.value}' is outside the supported ShEx subset",
                       DiagnosticKind.UNSUPPORTED_FEATURE)
            return None
        return TripleConstraint(predicate, node, cardinality), site

    def _parse_node_constraint(self, ref_sites: list[tuple[str, _Token]]) -> NodeConstraint | None:
        token = self.peek()
        if token.kind == "IDENT":
            word = token.value.lower()
            if word == "iri":
                self.advance()
                return NodeKindIri()
            if word in _UNSUPPORTED_KEYWORDS:
                self.advance()
                self.error(token, f"node constraint '{token.value}' is outside the supported ShEx subset",
                           DiagnosticKind.UNSUPPORTED_FEATURE)
                return None
            self.error(token, f"expected a node constraint, found {token.value!r}")
            return None
        if token.kind in ("PNAME", "IRIREF"):
            datatype = self._parse_iri(self.advance())
            return DatatypeConstraint(datatype) if datatype is not None else None
        if token.kind == "AT":
            self.advance()
            target = self.peek()
            if target.kind == "IRIREF":
                self.advance()
                label = target.value[1:-1]
                ref_sites.append((label, target))
                return ShapeRef(label)
            self.error(target, "expected <Label> after '@'")
            return None
        if token.value == "[":
            return self._parse_value_set(self.advance())
        if token.value in (".", "(", "~"):
            self.advance()
            self.error(token, f"node constraint {token.value!r} is outside the supported ShEx subset",
                       DiagnosticKind.UNSUPPORTED_FEATURE)
            return None
        self.error(token, f"expected a node constraint, found {token.value!r}")
        return None

    def _parse_value_set(self, opening: _Token) -> ValueSet | None:
        values = []
        ok = True
        while True:
            token = self.peek()
            if token.value == "]":
                self.advance()
                break
            if token.kind == "EOF":
                self.error(opening, "unterminated value set")
                return None
            if token.kind in ("PNAME", "IRIREF"):
                iri = self._parse_iri(self.advance())
                if iri is None:
                    ok = False
                elif iri in values:
                    self.error(token, f"duplicate value {token.value} in value set")
                    ok = False
                else:
                    values.append(iri)
            elif token.kind == "STRING":
                literal = self._parse_literal(self.advance())
                if literal is None:
                    ok = False
                elif literal in values:
                    self.error(token, "duplicate literal in value set")
                    ok = False
                else:
                    values.append(literal)
            elif token.kind == "NUMBER":
                self.advance()
                datatype = _XSD_DECIMAL if "." in token.value else _XSD_INTEGER
                literal = Literal(token.value, datatype)
                if literal in values:
                    self.error(token, f"duplicate value {token.value} in value set")
                    ok = False
                else:
                    values.append(literal)
            elif token.kind == "IDENT" and token.value in ("true", "false"):
                self.advance()
                values.append(Literal(token.value, _XSD_BOOLEAN))
            elif token.value in ("~", "-", "."):
                self.advance()
                self.error(token, f"value-set operator {token.value!r} is outside the supported ShEx subset",
                           DiagnosticKind.UNSUPPORTED_FEATURE)
                ok = False
            else:
                self.advance()
                self.error(token, f"unexpected token {token.value!r} in value set")
                ok = False
        if not ok:
            return None
        if not values:
            self.error(opening, "value set must be non-empty")
            return None
        return ValueSet(tuple(values))

    def _parse_literal(self, token: _Token) -> Literal | None:
        raw = token.value[1:-1]
        lexical = re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t", "r": "\r"}.get(m.group(1), m.group(1)), raw)
        if self.peek().kind == "LANGTAG":
            lang = self.advance().value[1:]
            return Literal(lexical, language=lang)
        if self.peek().kind == "DTCARET":
            self.advance()
            datatype = self._parse_iri(self.advance())
            if datatype is None:
                return None
            return Literal(lexical, datatype)
        return Literal(lexical)

    def _parse_cardinality(self) -> Cardinality:
        token = self.peek()
        if token.value == "?":
            self.advance()
            return Cardinality(0, 1)
        if token.value == "*":
            self.advance()
            return Cardinality(0, None)
        if token.value == "+":
            self.advance()
            return Cardinality(1, None)
        if token.value == "{" and self.peek(1).kind == "NUMBER":
            self.advance()
            low_tok = self.advance()
            low = int(low_tok.value)
            high: int | None = low
            if self.peek().value == ",":
                self.advance()
                if self.peek().kind == "NUMBER":
                    high = int(self.advance().value)
                else:
                    high = None
            if self.peek().value == "}":
                self.advance()
            else:
                self.error(self.peek(), "expected '}' to close cardinality")
            if low < 0 or (high is not None and high < low):
                self.error(low_tok, f"invalid cardinality range {{{low},{high}}}")
                return Cardinality(1, 1)
            return Cardinality(low, high)
        return Cardinality(1, 1)


def parse_shexc(text: str, focus_class: Iri | None = None) -> Schema:
    """Parse ShExC source into a :class:`Schema`.

    Raises :class:`ShexcParseError` carrying positioned diagnostics when the
    source is not valid subset ShExC.  ``focus_class`` overrides the class
    inferred from the start shape's typing constraint.
    """
    schema = _Parser(text).parse()
    if focus_class is not None:
        schema = Schema(schema.prefixes, schema.start_label, schema.shapes, focus_class)
    return schema


def try_parse_shexc(text: str) -> tuple[Schema | None, tuple[ParseDiagnostic, ...]]:
    """Total variant: returns (schema, ()) or (None, diagnostics)."""
    try:
        return parse_shexc(text), ()
    except ShexcParseError as exc:
        return None, exc.diagnostics


def _render_node(nc: NodeConstraint, prefixes: dict[str, str]) -> str:
    if isinstance(nc, NodeKindIri):
        return "IRI"
    if isinstance(nc, DatatypeConstraint):
        return compact_iri(nc.datatype, prefixes)
    if isinstance(nc, ValueSet):
        return "[ " + " ".join(render_value(v, prefixes) for v in nc.values) + " ]"
    if isinstance(nc, ShapeRef):
        return f"@<{nc.label}>"
    raise TypeError(f"not a node constraint: {nc!r}")


def serialize_shexc(schema: Schema) -> str:
    """Deterministic ShExC rendering of the canonical form of ``schema``.

    Parsing the output yields a schema structurally equal to
    ``canonicalize(schema)``.  Shapes without constraints cannot be expressed
    in the subset and are rejected.
    """
    canon = canonicalize(schema)
    for shape in canon.shapes.values():
        if not shape.constraints:
            raise ValueError(f"cannot serialize shape <{shape.label}> with no constraints")
    lines = [f"PREFIX {prefix}: <{namespace}>" for prefix, namespace in canon.prefixes.items()]
    if lines:
        lines.append("")
    for shape in canon.shapes.values():
        head = f"<{shape.label}>"
        if shape.extra_predicates:
            head += " EXTRA " + " ".join(compact_iri(p, canon.prefixes) for p in shape.extra_predicates)
        lines.append(head + " {")
        last = len(shape.constraints) - 1
        for index, constraint in enumerate(shape.constraints):
            parts = [compact_iri(constraint.predicate, canon.prefixes),
                     _render_node(constraint.node_constraint, canon.prefixes)]
            token = constraint.cardinality.token()
            if token:
                parts.append(token)
            lines.append("  " + " ".join(parts) + (" ;" if index < last else ""))
        lines.append("}")
        lines.append("")
    return "\n".join(lines)


def _node_to_json(nc: NodeConstraint) -> dict:
    if isinstance(nc, NodeKindIri):
        return {"type": "nodeKind", "kind": "iri"}
    if isinstance(nc, DatatypeConstraint):
        return {"type": "datatype", "datatype": nc.datatype.value}
    if isinstance(nc, ValueSet):
        values = []
        for value in nc.values:
            if isinstance(value, Iri):
                values.append({"type": "iri", "value": value.value})
            else:
                entry: dict = {"type": "literal", "value": value.lexical}
                if value.datatype is not None:
                    entry["datatype"] = value.datatype.value
                if value.language is not None:
                    entry["language"] = value.language
                values.append(entry)
        return {"type": "valueSet", "values": values}
    if isinstance(nc, ShapeRef):
        return {"type": "shapeRef", "label": nc.label}
    raise TypeError(f"not a node constraint: {nc!r}")


def to_canonical_json(schema: Schema) -> str:
    """Sorted-key structured rendering of the canonical form; byte-stable.

    Unbounded maxima are rendered as -1 so every cardinality is a number pair.
    """
    canon = canonicalize(schema)
    shapes = {}
    for label, shape in canon.shapes.items():
        shapes[label] = {
            "extra": [p.value for p in shape.extra_predicates],
            "constraints": [
                {
                    "predicate": c.predicate.value,
                    "node": _node_to_json(c.node_constraint),
                    "min": c.cardinality.min,
                    "max": -1 if c.cardinality.max is None else c.cardinality.max,
                }
                for c in shape.constraints
            ],
        }
    doc = {
        "focus_class": canon.focus_class.value if canon.focus_class else None,
        "prefixes": canon.prefixes,
        "start": canon.start_label,
        "shapes": shapes,
    }
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
