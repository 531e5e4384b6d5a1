"""Generate and evaluate ShEx validating schemas for knowledge-graph classes."""

from .model import (
    Cardinality,
    DatatypeCategory,
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
    classes_of,
    datatype_category,
)
from .shexc import ParseDiagnostic, ShexcParseError, parse_shexc, serialize_shexc, to_canonical_json
from .treedist import nged, schema_ged, schema_to_tree, tree_edit_distance
from .matching import (
    ALL_CRITERIA,
    CardinalityMode,
    ErrorBreakdown,
    EvalReport,
    MatchCriteria,
    NodeMode,
    StaticSubclassOracle,
    cardinality_loosened,
    categorize_errors,
    constraint_matches,
    evaluate_pair,
    macro_average,
)
from .kginfo import EndpointConfig, GlobalPredicateRecord, KgClient, KgKind, KgSubclassOracle
from .prompts import ChatPrompt, PromptSetting, build_global_prompt, build_local_prompt, build_triples_prompt
from .generate import (
    MinerThresholds,
    ScriptedLlmClient,
    StubLlmClient,
    TranscriptRecorder,
    assemble_schema,
    generate_end_to_end,
    generate_global,
    mine_baseline_schema,
)
from .cardml import CardinalityModel, evaluate_cardinality_accuracy, extract_features, predict_cardinality, train

__version__ = "0.1.0"

__all__ = [
    "ALL_CRITERIA",
    "Cardinality",
    "CardinalityMode",
    "CardinalityModel",
    "ChatPrompt",
    "DatatypeCategory",
    "DatatypeConstraint",
    "EndpointConfig",
    "ErrorBreakdown",
    "EvalReport",
    "GlobalPredicateRecord",
    "Iri",
    "KgClient",
    "KgKind",
    "KgSubclassOracle",
    "Literal",
    "MatchCriteria",
    "MinerThresholds",
    "NodeConstraint",
    "NodeKindIri",
    "NodeMode",
    "ParseDiagnostic",
    "PromptSetting",
    "Schema",
    "ScriptedLlmClient",
    "Shape",
    "ShapeRef",
    "ShexcParseError",
    "StaticSubclassOracle",
    "StubLlmClient",
    "TranscriptRecorder",
    "TripleConstraint",
    "ValueSet",
    "assemble_schema",
    "build_global_prompt",
    "build_local_prompt",
    "build_triples_prompt",
    "canonicalize",
    "cardinality_loosened",
    "categorize_errors",
    "classes_of",
    "constraint_matches",
    "datatype_category",
    "evaluate_cardinality_accuracy",
    "evaluate_pair",
    "extract_features",
    "generate_end_to_end",
    "generate_global",
    "macro_average",
    "mine_baseline_schema",
    "nged",
    "parse_shexc",
    "predict_cardinality",
    "schema_ged",
    "schema_to_tree",
    "serialize_shexc",
    "to_canonical_json",
    "train",
    "tree_edit_distance",
]
