"""SPARQL extraction of local, triple-level, and global class information.

Every query goes through a deterministic on-disk cache keyed by the
whitespace-normalized query text plus the endpoint URL.  A cache hit never
touches the network; concurrent misses on the same key collapse to a single
request; offline mode turns misses into errors instead of requests.  Cache
files are plain JSON holding the query, a timestamp, and the standard SPARQL
results document, so they can be inspected and checked into fixtures.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum, IntFlag
from pathlib import Path
from typing import Callable, Union

import requests

from .model import RDFS_NS, Iri, Literal

log = logging.getLogger(__name__)


class EndpointError(RuntimeError):
    """The endpoint could not be reached or answered with an error."""


class MalformedResultsError(ValueError):
    """The endpoint's response is not a SPARQL JSON results document."""


class CacheMissError(LookupError):
    """Offline mode hit a cold cache key."""

    def __init__(self, key: str, query: str):
        self.key = key
        self.query = query
        super().__init__(f"offline cache miss for key {key}")


class KgKind(Enum):
    WIKIDATA = "wikidata"
    YAGO = "yago"


@dataclass(frozen=True)
class BlankNode:
    id: str


Term = Union[Iri, Literal, BlankNode]


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term
    subject_label: str | None = None
    predicate_label: str | None = None
    object_label: str | None = None


@dataclass(frozen=True)
class EndpointConfig:
    endpoint_url: str
    kg_kind: KgKind
    typing_predicate: Iri
    cache_dir: Path
    request_timeout: float = 60.0
    max_in_flight: int = 2
    retry_backoff_ms: tuple[int, ...] = (500, 1000, 2000)
    offline: bool = False
    subclass_max_depth: int = 10
    sample_pool_limit: int = 10000

    def __post_init__(self) -> None:
        if self.max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")

    @property
    def subclass_predicate(self) -> Iri:
        if self.kg_kind is KgKind.WIKIDATA:
            return Iri("http://www.wikidata.org/prop/direct/P279")
        return Iri(RDFS_NS + "subClassOf")

    @property
    def description_predicate(self) -> Iri:
        if self.kg_kind is KgKind.WIKIDATA:
            return Iri("http://schema.org/description")
        return Iri(RDFS_NS + "comment")


class RecordField(IntFlag):
    """Completeness bits for a :class:`GlobalPredicateRecord`."""

    FREQUENCY = 1
    CARDINALITY = 2
    DATATYPES = 4
    OBJECT_CLASSES = 8
    EXAMPLES = 16
    LABELS = 32
    CONSTRAINTS = 64


@dataclass(frozen=True)
class GlobalPredicateRecord:
    """Aggregated profile of one (class, predicate) pair.

    Distribution values are fractions of the class's instance population, so
    the cardinality distribution together with ``1 - frequency`` (the zero
    bucket) sums to one.
    """

    class_uri: Iri
    predicate_uri: Iri
    class_label: str | None = None
    class_description: str | None = None
    predicate_label: str | None = None
    predicate_description: str | None = None
    triple_examples: tuple[Triple, ...] = ()
    frequency: float = 0.0
    cardinality_distribution: dict[int, float] = field(default_factory=dict)
    datatype_of_objects: dict[str, float] = field(default_factory=dict)
    object_class_distribution: dict[str, float] = field(default_factory=dict)
    subject_type_constraint: tuple[Iri, ...] | None = None
    value_type_constraint: tuple[Iri, ...] | None = None
    completeness: RecordField = RecordField(0)

    def __post_init__(self) -> None:
        if len(self.triple_examples) > 5:
            raise ValueError("at most 5 triple examples are kept")
        if not 0.0 <= self.frequency <= 1.0 + 1e-9:
            raise ValueError(f"frequency outside [0,1]: {self.frequency}")
        for mapping in (self.cardinality_distribution, self.datatype_of_objects, self.object_class_distribution):
            for value in mapping.values():
                if not 0.0 <= value <= 1.0 + 1e-9:
                    raise ValueError(f"distribution fraction outside [0,1]: {value}")
        if any(k < 1 for k in self.cardinality_distribution):
            raise ValueError("cardinality distribution keys must be >= 1")

    def has(self, fields: RecordField) -> bool:
        return (self.completeness & fields) == fields


# -- query templates ---------------------------------------------------------

def frequency_query(class_iri: Iri, typing_predicate: Iri) -> str:
    return (
        "SELECT DISTINCT ?predicate (COUNT(DISTINCT ?subject) AS ?count)\n"
        "WHERE {\n"
        f"  ?subject <{typing_predicate}> <{class_iri}> ;\n"
        "           ?predicate ?object .\n"
        "}\n"
        "GROUP BY ?predicate\n"
        "ORDER BY DESC(?count)"
    )


def datatype_query(class_iri: Iri, predicate: Iri, typing_predicate: Iri) -> str:
    return (
        "SELECT ?kind (COUNT(?object) AS ?count)\n"
        "WHERE {\n"
        f"  ?subject <{typing_predicate}> <{class_iri}> ;\n"
        f"           <{predicate}> ?object .\n"
        "  BIND (IF(isIRI(?object), \"IRI\", IF(isBlank(?object), \"bnode\", STR(DATATYPE(?object)))) AS ?kind)\n"
        "}\n"
        "GROUP BY ?kind\n"
        "ORDER BY DESC(?count)"
    )


def missing_query(class_iri: Iri, predicate: Iri, typing_predicate: Iri) -> str:
    return (
        "SELECT (COUNT(DISTINCT ?subject) AS ?count)\n"
        "WHERE {\n"
        f"  ?subject <{typing_predicate}> <{class_iri}> .\n"
        "  FILTER NOT EXISTS {\n"
        f"    ?subject <{predicate}> ?object\n"
        "  }\n"
        "}"
    )


def cardinality_query(class_iri: Iri, predicate: Iri, typing_predicate: Iri) -> str:
    return (
        "SELECT ?cardinality (COUNT(DISTINCT ?subject) AS ?count)\n"
        "{\n"
        "  SELECT DISTINCT ?subject (COUNT(?object) AS ?cardinality)\n"
        "  WHERE {\n"
        f"    ?subject <{typing_predicate}> <{class_iri}> ;\n"
        f"             <{predicate}> ?object .\n"
        "  }\n"
        "  GROUP BY ?subject\n"
        "}\n"
        "GROUP BY ?cardinality\n"
        "ORDER BY DESC(?count)"
    )


def instance_count_query(class_iri: Iri, typing_predicate: Iri) -> str:
    return (
        "SELECT (COUNT(DISTINCT ?subject) AS ?count)\n"
        "WHERE {\n"
        f"  ?subject <{typing_predicate}> <{class_iri}> .\n"
        "}"
    )


def instances_query(class_iri: Iri, typing_predicate: Iri, limit: int) -> str:
    return (
        "SELECT DISTINCT ?instance\n"
        "WHERE {\n"
        f"  ?instance <{typing_predicate}> <{class_iri}> .\n"
        "}\n"
        f"LIMIT {limit}"
    )


def instance_richness_query(class_iri: Iri, typing_predicate: Iri, limit: int) -> str:
    return (
        "SELECT ?instance (COUNT(DISTINCT ?predicate) AS ?count)\n"
        "WHERE {\n"
        f"  ?instance <{typing_predicate}> <{class_iri}> ;\n"
        "            ?predicate ?object .\n"
        "}\n"
        "GROUP BY ?instance\n"
        "ORDER BY DESC(?count)\n"
        f"LIMIT {limit}"
    )


def instance_triples_query(instance: Iri) -> str:
    return (
        "SELECT ?predicate ?object\n"
        "WHERE {\n"
        f"  <{instance}> ?predicate ?object .\n"
        "}\n"
        "ORDER BY ?predicate"
    )


def triple_examples_query(class_iri: Iri, predicate: Iri, typing_predicate: Iri, limit: int = 5) -> str:
    return (
        "SELECT ?subject ?object\n"
        "WHERE {\n"
        f"  ?subject <{typing_predicate}> <{class_iri}> ;\n"
        f"           <{predicate}> ?object .\n"
        "}\n"
        "ORDER BY ?subject ?object\n"
        f"LIMIT {limit}"
    )


def object_classes_query(class_iri: Iri, predicate: Iri, typing_predicate: Iri) -> str:
    return (
        "SELECT ?class (COUNT(?object) AS ?count)\n"
        "WHERE {\n"
        f"  ?subject <{typing_predicate}> <{class_iri}> ;\n"
        f"           <{predicate}> ?object .\n"
        f"  ?object <{typing_predicate}> ?class .\n"
        "}\n"
        "GROUP BY ?class\n"
        "ORDER BY DESC(?count)"
    )


def label_query(term: Iri, language: str = "en") -> str:
    return (
        "SELECT ?label\n"
        "WHERE {\n"
        f"  <{term}> <{RDFS_NS}label> ?label .\n"
        f"  FILTER (LANG(?label) = \"{language}\" || LANG(?label) = \"\")\n"
        "}\n"
        "LIMIT 1"
    )


def description_query(term: Iri, description_predicate: Iri, language: str = "en") -> str:
    return (
        "SELECT ?description\n"
        "WHERE {\n"
        f"  <{term}> <{description_predicate}> ?description .\n"
        f"  FILTER (LANG(?description) = \"{language}\" || LANG(?description) = \"\")\n"
        "}\n"
        "LIMIT 1"
    )


WIKIDATA_VALUE_TYPE_CONSTRAINT = Iri("http://www.wikidata.org/entity/Q21510865")
WIKIDATA_SUBJECT_TYPE_CONSTRAINT = Iri("http://www.wikidata.org/entity/Q21503250")


def property_constraint_query(property_entity: Iri, constraint_type: Iri) -> str:
    return (
        "SELECT DISTINCT ?class\n"
        "WHERE {\n"
        f"  <{property_entity}> <http://www.wikidata.org/prop/P2302> ?statement .\n"
        f"  ?statement <http://www.wikidata.org/prop/statement/P2302> <{constraint_type}> ;\n"
        "             <http://www.wikidata.org/prop/qualifier/P2308> ?class .\n"
        "}\n"
        "ORDER BY ?class"
    )


def subclass_path_query(c: Iri, c_prime: Iri, subclass_predicate: Iri, depth: int) -> str:
    path = "/".join(f"(<{subclass_predicate}>?)" for _ in range(max(depth, 1)))
    return f"ASK {{\n  <{c}> {path} <{c_prime}> .\n}}"


# -- results plumbing --------------------------------------------------------

def _normalize_query(query: str) -> str:
    return " ".join(query.split())


def cache_key(query: str, endpoint_url: str) -> str:
    digest = hashlib.sha256(f"{_normalize_query(query)}\n{endpoint_url}".encode("utf-8")).hexdigest()
    return digest


def term_from_binding(binding: dict) -> Term:
    kind = binding.get("type")
    value = binding.get("value", "")
    if kind == "uri":
        return Iri(value)
    if kind == "bnode":
        return BlankNode(value)
    datatype = binding.get("datatype")
    language = binding.get("xml:lang")
    return Literal(value, Iri(datatype) if datatype else None, language)


def _int_value(binding: dict) -> int:
    try:
        return int(binding["value"])
    except (KeyError, ValueError) as exc:
        raise MalformedResultsError(f"expected an integer binding, got {binding!r}") from exc


def http_transport(cfg: EndpointConfig) -> Callable[[str], dict]:
    """Default transport: POST to the endpoint, expect SPARQL JSON results."""

    def send(query: str) -> dict:
        try:
            response = requests.post(
                cfg.endpoint_url,
                data={"query": query},
                headers={
                    "Accept": "application/sparql-results+json",
                    "User-Agent": "shexbench/0.1 (schema extraction)",
                },
                timeout=cfg.request_timeout,
            )
        except requests.RequestException as exc:
            raise EndpointError(f"request to {cfg.endpoint_url} failed: {exc}") from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise _RetryableEndpointError(f"HTTP {response.status_code} from {cfg.endpoint_url}")
        if response.status_code != 200:
            raise EndpointError(f"HTTP {response.status_code} from {cfg.endpoint_url}: {response.text[:200]}")
        try:
            return response.json()
        except ValueError as exc:
            raise MalformedResultsError(f"non-JSON response from {cfg.endpoint_url}") from exc

    return send


class _RetryableEndpointError(EndpointError):
    """Transient failure (429/5xx); eligible for backoff retries."""


class KgClient:
    """Cached SPARQL client plus the extraction operations built on it.

    ``transport`` may be replaced by a stub callable ``query -> results doc``
    for tests and recorded fixtures.  Thread-safe: at most ``max_in_flight``
    requests run concurrently and identical cache misses are single-flight.
    """

    def __init__(self, cfg: EndpointConfig, transport: Callable[[str], dict] | None = None):
        self.cfg = cfg
        self.keys_touched: set[str] = set()
        self._transport = transport or http_transport(cfg)
        self._gate = threading.BoundedSemaphore(cfg.max_in_flight)
        self._key_locks: dict[str, threading.Lock] = {}
        self._key_locks_guard = threading.Lock()
        self._subclass_memo: dict[tuple[Iri, Iri], bool] = {}

    # -- cache layer ---------------------------------------------------------

    def cached_query(self, query: str) -> dict:
        """SPARQL JSON results for ``query``, served from the cache when warm."""
        key = cache_key(query, self.cfg.endpoint_url)
        self.keys_touched.add(key)
        path = Path(self.cfg.cache_dir) / f"{key}.json"
        cached = self._read_cache(path)
        if cached is not None:
            return cached
        if self.cfg.offline:
            raise CacheMissError(key, query)
        with self._key_lock(key):
            cached = self._read_cache(path)
            if cached is not None:
                return cached
            results = self._fetch(query)
            self._write_cache(path, query, results)
            return results

    def _key_lock(self, key: str) -> threading.Lock:
        with self._key_locks_guard:
            return self._key_locks.setdefault(key, threading.Lock())

    @staticmethod
    def _read_cache(path: Path) -> dict | None:
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text())["results_document"]
        except (ValueError, KeyError) as exc:
            raise MalformedResultsError(f"corrupt cache file {path}: {exc}") from exc

    def _write_cache(self, path: Path, query: str, results: dict) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "endpoint": self.cfg.endpoint_url,
            "query": query,
            "fetched_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "results_document": results,
        }
        tmp = path.with_name(path.name + f".tmp{os.getpid()}")
        tmp.write_text(json.dumps(payload, indent=2, ensure_ascii=False))
        os.replace(tmp, path)

    def _fetch(self, query: str) -> dict:
        delays = [ms / 1000.0 for ms in self.cfg.retry_backoff_ms]
        attempts = len(delays) + 1
        for attempt in range(attempts):
            try:
                with self._gate:
                    doc = self._transport(query)
                if not isinstance(doc, dict) or ("results" not in doc and "boolean" not in doc):
                    raise MalformedResultsError(f"not a SPARQL results document: {type(doc).__name__}")
                return doc
            except _RetryableEndpointError as exc:
                if attempt == attempts - 1:
                    raise EndpointError(str(exc)) from exc
                log.warning("retrying after transient endpoint error: %s", exc)
                time.sleep(delays[attempt])
        raise EndpointError("unreachable")

    def _rows(self, query: str) -> list[dict]:
        doc = self.cached_query(query)
        try:
            return doc["results"]["bindings"]
        except (KeyError, TypeError) as exc:
            raise MalformedResultsError(f"results document has no bindings: {exc}") from exc

    def _ask(self, query: str) -> bool:
        doc = self.cached_query(query)
        try:
            return bool(doc["boolean"])
        except (KeyError, TypeError) as exc:
            raise MalformedResultsError("ASK response carries no boolean") from exc

    # -- extraction operations ------------------------------------------------

    def predicate_frequencies(self, class_iri: Iri) -> dict[Iri, int]:
        """Distinct-subject usage count per predicate, descending."""
        rows = self._rows(frequency_query(class_iri, self.cfg.typing_predicate))
        counts = {}
        for row in rows:
            predicate = term_from_binding(row["predicate"])
            if isinstance(predicate, Iri):
                counts[predicate] = _int_value(row["count"])
        ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
        return dict(ordered)

    def instance_count(self, class_iri: Iri) -> int:
        rows = self._rows(instance_count_query(class_iri, self.cfg.typing_predicate))
        return _int_value(rows[0]["count"]) if rows else 0

    def cardinality_distribution(self, class_iri: Iri, predicate: Iri) -> dict[int, int]:
        """Instances with exactly k objects for the predicate, for each k >= 1."""
        rows = self._rows(cardinality_query(class_iri, predicate, self.cfg.typing_predicate))
        histogram = {_int_value(row["cardinality"]): _int_value(row["count"]) for row in rows}
        return dict(sorted(histogram.items()))

    def count_missing(self, class_iri: Iri, predicate: Iri) -> int:
        """Instances of the class with no objects at all for the predicate."""
        rows = self._rows(missing_query(class_iri, predicate, self.cfg.typing_predicate))
        return _int_value(rows[0]["count"]) if rows else 0

    def object_profiles(self, class_iri: Iri, predicate: Iri) -> tuple[dict[str, int], dict[str, int]]:
        """(datatype histogram, object class histogram) for a predicate's objects.

        Datatype keys are datatype IRIs plus the reserved "IRI" and "bnode"
        buckets; class keys are class IRIs of IRI-valued objects.
        """
        datatype_rows = self._rows(datatype_query(class_iri, predicate, self.cfg.typing_predicate))
        datatypes = {}
        for row in datatype_rows:
            datatypes[row["kind"]["value"]] = _int_value(row["count"])
        class_rows = self._rows(object_classes_query(class_iri, predicate, self.cfg.typing_predicate))
        classes = {}
        for row in class_rows:
            term = term_from_binding(row["class"])
            if isinstance(term, Iri):
                classes[term.value] = _int_value(row["count"])
        def by_share(histogram: dict[str, int]) -> dict[str, int]:
            return dict(sorted(histogram.items(), key=lambda item: (-item[1], item[0])))

        return by_share(datatypes), by_share(classes)

    def sample_instances(self, class_iri: Iri, n: int) -> list[Iri]:
        """Representative instances: Wikidata by shortest/lowest numeric ID,
        YAGO by richest distinct-predicate usage.  Deterministic per snapshot;
        returns all available when fewer than ``n`` exist."""
        if n < 1:
            raise ValueError("sample size must be >= 1")
        if self.cfg.kg_kind is KgKind.WIKIDATA:
            rows = self._rows(instances_query(class_iri, self.cfg.typing_predicate, self.cfg.sample_pool_limit))
            instances = [term_from_binding(r["instance"]) for r in rows]
            instances = [i for i in instances if isinstance(i, Iri)]
            instances.sort(key=_wikidata_id_sort_key)
            return instances[:n]
        rows = self._rows(instance_richness_query(class_iri, self.cfg.typing_predicate, self.cfg.sample_pool_limit))
        ranked = []
        for row in rows:
            instance = term_from_binding(row["instance"])
            if isinstance(instance, Iri):
                ranked.append((-_int_value(row["count"]), instance))
        ranked.sort()
        return [instance for _, instance in ranked[:n]]

    def instance_triples(self, instance: Iri, with_labels: bool = True) -> list[Triple]:
        """One-hop triples of an instance, optionally with English labels."""
        rows = self._rows(instance_triples_query(instance))
        subject_label = self.label_of(instance) if with_labels else None
        triples = []
        for row in rows:
            predicate = term_from_binding(row["predicate"])
            obj = term_from_binding(row["object"])
            if not isinstance(predicate, Iri):
                continue
            triples.append(
                Triple(
                    instance,
                    predicate,
                    obj,
                    subject_label=subject_label,
                    predicate_label=self.label_of(self._labeled_form(predicate)) if with_labels else None,
                    object_label=self.label_of(obj) if with_labels and isinstance(obj, Iri) else None,
                )
            )
        return triples

    def triple_examples(self, class_iri: Iri, predicate: Iri, limit: int = 5, with_labels: bool = True) -> list[Triple]:
        rows = self._rows(triple_examples_query(class_iri, predicate, self.cfg.typing_predicate, limit))
        predicate_label = self.label_of(self._labeled_form(predicate)) if with_labels else None
        triples = []
        for row in rows:
            subject = term_from_binding(row["subject"])
            obj = term_from_binding(row["object"])
            if not isinstance(subject, Iri) or isinstance(obj, BlankNode):
                continue
            triples.append(
                Triple(
                    subject,
                    predicate,
                    obj,
                    subject_label=self.label_of(subject) if with_labels else None,
                    predicate_label=predicate_label,
                    object_label=self.label_of(obj) if with_labels and isinstance(obj, Iri) else None,
                )
            )
        return triples[:limit]

    def label_of(self, term: Iri) -> str | None:
        rows = self._rows(label_query(term))
        return rows[0]["label"]["value"] if rows else None

    def description_of(self, term: Iri) -> str | None:
        rows = self._rows(description_query(term, self.cfg.description_predicate))
        return rows[0]["description"]["value"] if rows else None

    def _labeled_form(self, predicate: Iri) -> Iri:
        # Wikidata labels live on the property entity, not the direct-property IRI.
        direct_ns = "http://www.wikidata.org/prop/direct/"
        if self.cfg.kg_kind is KgKind.WIKIDATA and predicate.value.startswith(direct_ns):
            return Iri("http://www.wikidata.org/entity/" + predicate.value[len(direct_ns):])
        return predicate

    def property_constraint_classes(self, predicate: Iri, constraint_type: Iri) -> tuple[Iri, ...]:
        if self.cfg.kg_kind is not KgKind.WIKIDATA:
            return ()
        rows = self._rows(property_constraint_query(self._labeled_form(predicate), constraint_type))
        classes = [term_from_binding(r["class"]) for r in rows]
        return tuple(sorted(c for c in classes if isinstance(c, Iri)))

    def is_subclass_of(self, c: Iri, c_prime: Iri) -> bool:
        """Reflexive-transitive subclass test, bounded to the configured depth."""
        if c == c_prime:
            return True
        memo_key = (c, c_prime)
        if memo_key not in self._subclass_memo:
            query = subclass_path_query(c, c_prime, self.cfg.subclass_predicate, self.cfg.subclass_max_depth)
            self._subclass_memo[memo_key] = self._ask(query)
        return self._subclass_memo[memo_key]

    def build_global_record(self, class_iri: Iri, predicate: Iri) -> GlobalPredicateRecord:
        """Compose the per-predicate profile that feeds prompts and features.

        Frequency and the cardinality distribution are required; labels,
        descriptions, examples, and Wikidata constraint lists are best-effort
        and tracked through the completeness bitmask.
        """
        total = self.instance_count(class_iri)
        frequencies = self.predicate_frequencies(class_iri)
        used = frequencies.get(predicate, 0)
        frequency = (used / total) if total else 0.0
        completeness = RecordField.FREQUENCY

        cardinality = {}
        try:
            histogram = self.cardinality_distribution(class_iri, predicate)
            cardinality = {k: (v / total if total else 0.0) for k, v in histogram.items()}
            completeness |= RecordField.CARDINALITY
        except (EndpointError, CacheMissError) as exc:
            log.warning("cardinality distribution unavailable for %s / %s: %s", class_iri, predicate, exc)

        datatypes: dict[str, float] = {}
        object_classes: dict[str, float] = {}
        try:
            datatype_hist, class_hist = self.object_profiles(class_iri, predicate)
            total_objects = sum(datatype_hist.values())
            datatypes = {k: v / total_objects for k, v in datatype_hist.items()} if total_objects else {}
            total_classified = sum(class_hist.values())
            object_classes = {k: v / total_classified for k, v in class_hist.items()} if total_classified else {}
            completeness |= RecordField.DATATYPES | RecordField.OBJECT_CLASSES
        except (EndpointError, CacheMissError) as exc:
            log.warning("object profiles unavailable for %s / %s: %s", class_iri, predicate, exc)

        examples: tuple[Triple, ...] = ()
        try:
            examples = tuple(self.triple_examples(class_iri, predicate))
            completeness |= RecordField.EXAMPLES
        except (EndpointError, CacheMissError) as exc:
            log.warning("triple examples unavailable for %s / %s: %s", class_iri, predicate, exc)

        labels: dict[str, str | None] = {"class_label": None, "class_description": None,
                                         "predicate_label": None, "predicate_description": None}
        try:
            labels["class_label"] = self.label_of(class_iri)
            labels["class_description"] = self.description_of(class_iri)
            labeled_predicate = self._labeled_form(predicate)
            labels["predicate_label"] = self.label_of(labeled_predicate)
            labels["predicate_description"] = self.description_of(labeled_predicate)
            completeness |= RecordField.LABELS
        except (EndpointError, CacheMissError) as exc:
            log.warning("labels unavailable for %s / %s: %s", class_iri, predicate, exc)

        subject_types: tuple[Iri, ...] | None = None
        value_types: tuple[Iri, ...] | None = None
        if self.cfg.kg_kind is KgKind.WIKIDATA:
            try:
                subject_types = self.property_constraint_classes(predicate, WIKIDATA_SUBJECT_TYPE_CONSTRAINT)
                value_types = self.property_constraint_classes(predicate, WIKIDATA_VALUE_TYPE_CONSTRAINT)
                completeness |= RecordField.CONSTRAINTS
            except (EndpointError, CacheMissError) as exc:
                log.warning("property constraints unavailable for %s: %s", predicate, exc)

        return GlobalPredicateRecord(
            class_uri=class_iri,
            predicate_uri=predicate,
            class_label=labels["class_label"],
            class_description=labels["class_description"],
            predicate_label=labels["predicate_label"],
            predicate_description=labels["predicate_description"],
            triple_examples=examples,
            frequency=min(frequency, 1.0),
            cardinality_distribution=cardinality,
            datatype_of_objects=datatypes,
            object_class_distribution=object_classes,
            subject_type_constraint=subject_types,
            value_type_constraint=value_types,
            completeness=completeness,
        )


def _wikidata_id_sort_key(iri: Iri) -> tuple[int, int, str]:
    local = iri.local_name()
    match = re.fullmatch(r"Q(\d+)", local)
    numeric = int(match.group(1)) if match else 10**18
    return (len(local), numeric, iri.value)


class KgSubclassOracle:
    """Subclass oracle over a cached KG client (value types on Wikidata only)."""

    def __init__(self, client: KgClient):
        self._client = client

    def is_subclass_of(self, c: Iri, c_prime: Iri) -> bool:
        return self._client.is_subclass_of(c, c_prime)

    def value_type_classes(self, predicate: Iri) -> frozenset[Iri]:
        if self._client.cfg.kg_kind is not KgKind.WIKIDATA:
            return frozenset()
        try:
            return frozenset(
                self._client.property_constraint_classes(predicate, WIKIDATA_VALUE_TYPE_CONSTRAINT)
            )
        except (EndpointError, CacheMissError):
            return frozenset()
