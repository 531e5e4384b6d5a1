"""Schema generation pipelines.

Local/triples settings generate a full ShEx script end-to-end with a bounded
parse/repair loop.  The global setting runs a two-step structured workflow per
candidate predicate: first an include/min/max cardinality decision, then a
node-constraint prediction for the accepted predicates; the validated parts
are assembled into a schema with a typing constraint and generated referenced
shapes.  A deterministic threshold miner provides a non-LLM baseline over the
same records, and the cardinality step can be swapped for a trained model.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal as TypingLiteral
from typing import Protocol, Sequence

import requests
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .kginfo import EndpointConfig, EndpointError, CacheMissError, GlobalPredicateRecord, KgClient
from .model import (
    WELL_KNOWN_PREFIXES,
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
    canonical_shape_label,
    canonicalize,
    expand_iri,
)
from .prompts import ChatPrompt, IncompleteRecordError, build_global_prompt
from .shexc import ParseDiagnostic, ShexcParseError, parse_shexc

log = logging.getLogger(__name__)

Message = dict[str, str]


class GenerationFailedError(RuntimeError):
    """End-to-end generation ran out of repair attempts."""

    def __init__(self, diagnostics: Sequence[ParseDiagnostic], transcript: Sequence[Message]):
        self.diagnostics = tuple(diagnostics)
        self.transcript = tuple(transcript)
        super().__init__(
            f"generation failed after {sum(1 for m in transcript if m['role'] == 'assistant')} attempt(s): "
            + "; ".join(str(d) for d in self.diagnostics)
        )


class StructuredOutputFailedError(RuntimeError):
    """A structured reply never validated within the retry budget."""

    def __init__(self, reason: str, transcript: Sequence[Message]):
        self.transcript = tuple(transcript)
        super().__init__(reason)


class StubReplyMissingError(LookupError):
    """The stub directory has no recorded reply for a prompt hash."""


class AssemblyError(ValueError):
    """Schema assembly received conflicting or empty parts."""


class LlmClient(Protocol):
    def send(self, messages: Sequence[Message]) -> str: ...


def prompt_hash(messages: Sequence[Message]) -> str:
    canonical = json.dumps(list(messages), sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class HttpLlmClient:
    """Chat-completions client for an OpenAI-style provider endpoint.

    The API key is read from the environment variable named in the config,
    never stored in files.
    """

    provider_url: str
    model: str
    api_key_env: str = "SHEXBENCH_API_KEY"
    temperature: float = 0.0
    request_timeout: float = 120.0

    def send(self, messages: Sequence[Message]) -> str:
        api_key = os.environ.get(self.api_key_env)
        if not api_key:
            raise RuntimeError(f"credential environment variable {self.api_key_env} is not set")
        try:
            response = requests.post(
                self.provider_url,
                json={"model": self.model, "messages": list(messages), "temperature": self.temperature},
                headers={"Authorization": f"Bearer {api_key}"},
                timeout=self.request_timeout,
            )
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            raise RuntimeError(f"provider request failed: {exc}") from exc


@dataclass
class StubLlmClient:
    """Replays recorded replies keyed by prompt hash; no network, referentially
    transparent per message sequence."""

    stub_dir: Path

    def send(self, messages: Sequence[Message]) -> str:
        key = prompt_hash(messages)
        path = Path(self.stub_dir) / f"{key}.json"
        if not path.exists():
            raise StubReplyMissingError(f"no recorded reply for prompt hash {key}")
        return json.loads(path.read_text())["reply"]


@dataclass
class ScriptedLlmClient:
    """Answers from a fixed reply queue; for tests and fixture recording."""

    replies: Sequence[str]
    sent: list[list[Message]] = field(default_factory=list)

    def send(self, messages: Sequence[Message]) -> str:
        self.sent.append(list(messages))
        if len(self.sent) > len(self.replies):
            raise StubReplyMissingError("scripted client ran out of replies")
        return self.replies[len(self.sent) - 1]


@dataclass
class TranscriptRecorder:
    """Wraps a client, persisting every exchange in stub-replayable form."""

    inner: LlmClient
    directory: Path

    def send(self, messages: Sequence[Message]) -> str:
        reply = self.inner.send(messages)
        key = prompt_hash(messages)
        path = Path(self.directory) / f"{key}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"messages": list(messages), "reply": reply}
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False))
        return reply

    @property
    def stub_dir(self) -> Path:
        return Path(self.directory)


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n|\n?```\s*$", re.MULTILINE)


def strip_code_fences(text: str) -> str:
    return _FENCE_RE.sub("", text.strip()).strip()


def extract_json_object(text: str) -> str:
    """First balanced JSON object in a reply (fences tolerated)."""
    cleaned = strip_code_fences(text)
    start = cleaned.find("{")
    if start < 0:
        raise ValueError("reply contains no JSON object")
    depth = 0
    in_string = False
    escaped = False
    for index in range(start, len(cleaned)):
        char = cleaned[index]
        if in_string:
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == '"':
                in_string = False
            continue
        if char == '"':
            in_string = True
        elif char == "{":
            depth += 1
        elif char == "}":
            depth -= 1
            if depth == 0:
                return cleaned[start:index + 1]
    raise ValueError("unbalanced JSON object in reply")


class StructuredCardinality(BaseModel):
    """Step-one output: include the predicate, and with which bounds.

    ``max`` accepts -1 or null for unbounded; bounds are ignored when
    ``include`` is false.
    """

    model_config = ConfigDict(extra="forbid")

    include: bool
    min: int = Field(default=0, ge=0)
    max: int | None = None

    @field_validator("max", mode="before")
    @classmethod
    def _minus_one_is_unbounded(cls, value):
        if value == -1:
            return None
        return value

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.include and self.max is not None and self.max < self.min:
            raise ValueError(f"max {self.max} < min {self.min}")
        return self

    def to_cardinality(self) -> Cardinality:
        return Cardinality(self.min, self.max)


class StructuredNodeConstraint(BaseModel):
    """Step-two output: at most one variant; empty means the IRI node kind."""

    model_config = ConfigDict(extra="forbid")

    datatype: str | None = None
    referenced_classes: list[str] | None = Field(default=None, min_length=1)
    value_list: list[str] | None = Field(default=None, min_length=1)
    node_kind: TypingLiteral["iri"] | None = None

    @model_validator(mode="after")
    def _exactly_one_variant(self):
        populated = [
            name for name, value in (
                ("datatype", self.datatype),
                ("referenced_classes", self.referenced_classes),
                ("value_list", self.value_list),
                ("node_kind", self.node_kind),
            ) if value is not None
        ]
        if len(populated) > 1:
            raise ValueError(f"node constraint variants are mutually exclusive, got {populated}")
        if not populated:
            self.node_kind = "iri"
        return self


CARDINALITY_INSTRUCTION = (
    "Decide whether this predicate belongs in the validating schema and, if so, "
    "its occurrence bounds. Respond with a single JSON object of the form "
    '{"include": <bool>, "min": <int>, "max": <int or null>} where null max '
    "means unbounded. No other text."
)

NODE_CONSTRAINT_INSTRUCTION = (
    "Predict the node constraint for this predicate's objects. Respond with a "
    "single JSON object containing at most one of: \"datatype\" (a datatype IRI), "
    '"referenced_classes" (a list of class IRIs the objects are instances of), '
    '"value_list" (the complete list of admissible literal values), or '
    '"node_kind": "iri". Respond with {} to default to the IRI node kind. '
    "No other text."
)


def _step_messages(prompt: ChatPrompt, instruction: str) -> list[Message]:
    amended = ChatPrompt(prompt.system, prompt.user + "\n\n" + instruction, prompt.fewshot)
    return amended.to_messages()


def _structured_request(
    model_cls,
    messages: list[Message],
    client: LlmClient,
    max_retries: int,
):
    transcript = list(messages)
    for attempt in range(max_retries + 1):
        reply = client.send(transcript)
        transcript.append({"role": "assistant", "content": reply})
        try:
            return model_cls.model_validate_json(extract_json_object(reply)), transcript
        except (ValueError, ValidationError) as exc:
            if attempt == max_retries:
                raise StructuredOutputFailedError(
                    f"reply failed validation after {attempt + 1} attempt(s): {exc}", transcript
                ) from exc
            transcript.append({
                "role": "user",
                "content": f"The previous reply was invalid: {exc}. Reply again with only the corrected JSON object.",
            })
    raise AssertionError("unreachable")


def predict_cardinality_structured(
    record: GlobalPredicateRecord,
    client: LlmClient,
    fewshot: tuple[tuple[str, str], ...] = (),
    max_retries: int = 2,
) -> StructuredCardinality:
    messages = _step_messages(build_global_prompt(record, fewshot), CARDINALITY_INSTRUCTION)
    result, _ = _structured_request(StructuredCardinality, messages, client, max_retries)
    return result


def predict_node_constraint_structured(
    record: GlobalPredicateRecord,
    client: LlmClient,
    fewshot: tuple[tuple[str, str], ...] = (),
    max_retries: int = 2,
) -> StructuredNodeConstraint:
    messages = _step_messages(build_global_prompt(record, fewshot), NODE_CONSTRAINT_INSTRUCTION)
    result, _ = _structured_request(StructuredNodeConstraint, messages, client, max_retries)
    return result


def generate_end_to_end(
    class_iri: Iri,
    prompt: ChatPrompt,
    client: LlmClient,
    max_repairs: int = 2,
) -> Schema:
    """Send the prompt, parse the reply as ShExC, and repair on diagnostics.

    Each repair round feeds the positioned diagnostics back to the model; after
    ``max_repairs`` failed rounds the final diagnostics and the full transcript
    surface in :class:`GenerationFailedError`.
    """
    transcript: list[Message] = prompt.to_messages()
    diagnostics: tuple[ParseDiagnostic, ...] = ()
    for attempt in range(max_repairs + 1):
        reply = client.send(transcript)
        transcript.append({"role": "assistant", "content": reply})
        try:
            schema = parse_shexc(strip_code_fences(reply))
            return replace(schema, focus_class=class_iri)
        except ShexcParseError as exc:
            diagnostics = exc.diagnostics
            if attempt == max_repairs:
                break
            listing = "\n".join(f"- {d}" for d in diagnostics)
            transcript.append({
                "role": "user",
                "content": (
                    "The ShEx schema failed to parse with the following errors:\n"
                    f"{listing}\nReply with the corrected ShEx schema only."
                ),
            })
    raise GenerationFailedError(diagnostics, transcript)


def _expand_term(text: str) -> Iri:
    try:
        return expand_iri(text.strip(), WELL_KNOWN_PREFIXES)
    except ValueError as exc:
        raise AssemblyError(str(exc)) from exc


def _node_constraint_from_structured(
    structured: StructuredNodeConstraint,
    typing_predicate: Iri,
    shapes: dict[str, Shape],
) -> NodeConstraint:
    if structured.datatype is not None:
        return DatatypeConstraint(_expand_term(structured.datatype))
    if structured.referenced_classes is not None:
        classes = tuple(sorted({_expand_term(c) for c in structured.referenced_classes}))
        label = canonical_shape_label(classes)
        shapes.setdefault(
            label,
            Shape(
                label,
                (TripleConstraint(typing_predicate, ValueSet(classes), Cardinality(1, 1)),),
                (typing_predicate,),
            ),
        )
        return ShapeRef(label)
    if structured.value_list is not None:
        values = []
        for value in structured.value_list:
            literal = Literal(value)
            if literal not in values:
                values.append(literal)
        return ValueSet(tuple(values))
    return NodeKindIri()


def assemble_schema(
    class_iri: Iri,
    parts: Sequence[tuple[Iri, StructuredCardinality, StructuredNodeConstraint]],
    cfg: EndpointConfig,
) -> Schema:
    """Combine per-predicate structured outputs into a canonical schema.

    The start shape carries EXTRA on the typing predicate and a leading
    ``typing [class]`` constraint; referenced-class variants materialize as
    one-constraint typing shapes.
    """
    typing_predicate = cfg.typing_predicate
    shapes: dict[str, Shape] = {}
    constraints: list[TripleConstraint] = [
        TripleConstraint(typing_predicate, ValueSet((class_iri,)), Cardinality(1, 1))
    ]
    seen = {typing_predicate}
    for predicate, cardinality, structured_node in parts:
        if not cardinality.include:
            continue
        if predicate in seen:
            raise AssemblyError(f"duplicate predicate in parts: {predicate}")
        seen.add(predicate)
        node = _node_constraint_from_structured(structured_node, typing_predicate, shapes)
        constraints.append(TripleConstraint(predicate, node, cardinality.to_cardinality()))
    if len(constraints) == 1:
        raise AssemblyError("no parts to assemble after exclusions")

    start_label = canonical_shape_label([class_iri])
    # a part may reference exactly the focus class; the start shape then
    # doubles as the referenced shape (same typing class set, same label)
    shapes.pop(start_label, None)
    all_shapes = {start_label: Shape(start_label, tuple(constraints), (typing_predicate,))}
    all_shapes.update(shapes)
    schema = Schema(
        prefixes=dict(WELL_KNOWN_PREFIXES),
        start_label=start_label,
        shapes=all_shapes,
        focus_class=class_iri,
    )
    return canonicalize(schema)


class CardinalitySource(Protocol):
    """Pluggable step-one implementation (LLM or a trained model)."""

    def predict(self, record: GlobalPredicateRecord) -> StructuredCardinality: ...


@dataclass
class LlmCardinalitySource:
    client: LlmClient
    fewshot: tuple[tuple[str, str], ...] = ()
    max_retries: int = 2

    def predict(self, record: GlobalPredicateRecord) -> StructuredCardinality:
        return predict_cardinality_structured(record, self.client, self.fewshot, self.max_retries)


@dataclass
class MlCardinalitySource:
    """Swaps the trained cardinality model into the global pipeline."""

    model: "CardinalityModel"  # noqa: F821 - imported lazily to avoid a cycle

    def predict(self, record: GlobalPredicateRecord) -> StructuredCardinality:
        from .cardml import extract_features, predict_cardinality

        cardinality = predict_cardinality(self.model, extract_features(record))
        return StructuredCardinality(include=True, min=cardinality.min, max=cardinality.max)


def generate_global(
    class_iri: Iri,
    kg: KgClient,
    client: LlmClient,
    cardinality_source: CardinalitySource | None = None,
    *,
    fewshot: tuple[tuple[str, str], ...] = (),
    max_candidates: int | None = None,
    max_retries: int = 2,
) -> Schema:
    """Two-step structured generation over the class's candidate predicates.

    Candidates come from the predicate frequency profile (typing predicate
    excluded - it is added back as the schema's typing constraint).  Failures
    on individual predicates are logged and skipped rather than aborting the
    class.
    """
    source = cardinality_source or LlmCardinalitySource(client, fewshot, max_retries)
    frequencies = kg.predicate_frequencies(class_iri)
    candidates = [p for p in frequencies if p != kg.cfg.typing_predicate]
    if max_candidates is not None:
        candidates = candidates[:max_candidates]

    parts: list[tuple[Iri, StructuredCardinality, StructuredNodeConstraint]] = []
    for predicate in candidates:
        try:
            record = kg.build_global_record(class_iri, predicate)
            cardinality = source.predict(record)
            if not cardinality.include:
                continue
            node = predict_node_constraint_structured(record, client, fewshot, max_retries)
            parts.append((predicate, cardinality, node))
        except (StructuredOutputFailedError, EndpointError, CacheMissError, IncompleteRecordError) as exc:
            log.warning("skipping predicate %s for %s: %s", predicate, class_iri, exc)
    return assemble_schema(class_iri, parts, kg.cfg)


@dataclass(frozen=True)
class MinerThresholds:
    """Support-style cutoffs for the deterministic baseline miner."""

    include_min_frequency: float = 0.05
    required_min_presence: float = 0.95
    functional_min_share: float = 0.95
    datatype_purity: float = 0.90
    class_purity: float = 0.80

    def __post_init__(self) -> None:
        for name in ("include_min_frequency", "required_min_presence", "functional_min_share",
                     "datatype_purity", "class_purity"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0,1], got {value}")


def mine_baseline_schema(
    class_iri: Iri,
    records: Sequence[GlobalPredicateRecord],
    thresholds: MinerThresholds,
    cfg: EndpointConfig,
) -> Schema:
    """Threshold miner over global records; fully deterministic.

    A predicate is kept when its usage frequency clears the include cutoff;
    min is 1 when presence clears the required cutoff; max is 1 when the share
    of instances with at most one value clears the functional cutoff; the node
    constraint is the dominant datatype, else a reference to the dominant
    object class, else the IRI node kind.
    """
    parts = []
    for record in records:
        if record.frequency < thresholds.include_min_frequency:
            continue
        minimum = 1 if record.frequency >= thresholds.required_min_presence else 0
        share_at_most_one = (1.0 - record.frequency) + record.cardinality_distribution.get(1, 0.0)
        maximum = 1 if share_at_most_one >= thresholds.functional_min_share else None
        cardinality = StructuredCardinality(include=True, min=minimum, max=maximum)

        node = StructuredNodeConstraint(node_kind="iri")
        literal_datatypes = {
            key: share for key, share in record.datatype_of_objects.items()
            if key not in ("IRI", "bnode")
        }
        dominant_datatype = max(literal_datatypes.items(), key=lambda item: (item[1], item[0]), default=None)
        dominant_class = max(
            record.object_class_distribution.items(), key=lambda item: (item[1], item[0]), default=None
        )
        if dominant_datatype is not None and dominant_datatype[1] >= thresholds.datatype_purity:
            node = StructuredNodeConstraint(datatype=dominant_datatype[0])
        elif dominant_class is not None and dominant_class[1] >= thresholds.class_purity:
            node = StructuredNodeConstraint(referenced_classes=[dominant_class[0]])
        parts.append((record.predicate_uri, cardinality, node))
    return assemble_schema(class_iri, parts, cfg)
