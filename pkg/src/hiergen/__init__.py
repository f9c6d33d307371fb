"""Augment an existing knowledge graph with generated multi-level hierarchies.

The package classifies detached nodes into top-level categories, generates
parent-child structure beneath each category through a pluggable completion
provider, and merges the proposals back into a versioned snapshot with
human-correction and coverage-reporting support.
"""

from .classifier import (
    CategorySet,
    ClassificationResult,
    FewShotExample,
    classify_all,
    classify_batch,
    compare_prompt_modes,
)
from .config import PipelineConfig, load_config
from .errors import (
    ClassMismatch,
    ConfigError,
    ContextOverflow,
    CorruptSnapshot,
    CycleRejected,
    DuplicateIdConflict,
    HierGenError,
    IllegalCategory,
    NoOutcomes,
    ProviderError,
    ProviderUnavailable,
    StaleDelta,
    TruncatedOutput,
    UnknownNode,
    UnparseableOutput,
    UnsupportedVersion,
)
from .generator import (
    CandidateSet,
    EvaluationVerdict,
    FindingKind,
    HierarchyDelta,
    ReviewFinding,
    Strategy,
    StrategyChoice,
    evaluate_subgraph,
    generate_cyclical,
    generate_one_shot,
    review_pass,
    select_strategy,
)
from .graph import Edge, Hierarchy, Node, Provenance, Violation, normalize_label
from .ingest import (
    Correction,
    CorrectionReport,
    CorrectionSet,
    GraphSnapshot,
    MergeReport,
    apply_corrections,
    apply_delta,
    dump_nodes_csv,
    hierarchy_checksum,
    load_nodes_csv,
    load_snapshot,
    merge_subgraph,
    read_snapshot,
    replay_log,
    save_snapshot,
    write_snapshot,
)
from .mock import CorruptionMode, MockOracle, MockOracleConfig
from .provider import (
    CompletionProviderBase,
    CompletionResponse,
    FinishReason,
    PromptRequest,
    ProviderConfig,
    RealProvider,
    ReplayProvider,
    TranscriptRecorder,
    estimate_tokens,
)
from .stats import (
    CoverageReport,
    ReviewOutcome,
    ReviewSample,
    coverage_report,
    level_histogram,
    relevance_summary,
    sample_for_review,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateSet",
    "CategorySet",
    "ClassMismatch",
    "ClassificationResult",
    "CompletionProviderBase",
    "CompletionResponse",
    "ConfigError",
    "ContextOverflow",
    "Correction",
    "CorrectionReport",
    "CorrectionSet",
    "CorruptSnapshot",
    "CorruptionMode",
    "CoverageReport",
    "CycleRejected",
    "DuplicateIdConflict",
    "Edge",
    "EvaluationVerdict",
    "FewShotExample",
    "FindingKind",
    "FinishReason",
    "GraphSnapshot",
    "HierGenError",
    "Hierarchy",
    "HierarchyDelta",
    "IllegalCategory",
    "MergeReport",
    "MockOracle",
    "MockOracleConfig",
    "NoOutcomes",
    "Node",
    "PipelineConfig",
    "PromptRequest",
    "Provenance",
    "ProviderConfig",
    "ProviderError",
    "ProviderUnavailable",
    "RealProvider",
    "ReplayProvider",
    "ReviewFinding",
    "ReviewOutcome",
    "ReviewSample",
    "StaleDelta",
    "Strategy",
    "StrategyChoice",
    "TranscriptRecorder",
    "TruncatedOutput",
    "UnknownNode",
    "UnparseableOutput",
    "UnsupportedVersion",
    "Violation",
    "apply_corrections",
    "apply_delta",
    "classify_all",
    "classify_batch",
    "compare_prompt_modes",
    "coverage_report",
    "dump_nodes_csv",
    "estimate_tokens",
    "evaluate_subgraph",
    "generate_cyclical",
    "generate_one_shot",
    "hierarchy_checksum",
    "level_histogram",
    "load_config",
    "load_nodes_csv",
    "load_snapshot",
    "merge_subgraph",
    "normalize_label",
    "read_snapshot",
    "relevance_summary",
    "replay_log",
    "review_pass",
    "sample_for_review",
    "save_snapshot",
    "select_strategy",
    "write_snapshot",
]
