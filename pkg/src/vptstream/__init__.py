"""Streaming evaluation and streamability analysis for visibly pushdown
transducers over nested words."""

from .nested_words import (
    ScanState,
    StructuredAlphabet,
    SymbolKind,
    UnknownSymbol,
    classify,
    is_well_nested,
    scan,
)
from .delay_algebra import (
    DelayPair,
    EmptySet,
    PremiseViolated,
    delay_mismatch,
    delta,
    delta_extend,
    lcp,
)
from .vpt_core import (
    CallRule,
    Configuration,
    CounterExample,
    DConfiguration,
    FstMachine,
    FstRule,
    FunctionalUpTo,
    InternalRule,
    MachineMetrics,
    NotFunctionalWitness,
    ParseError,
    ReturnRule,
    StateExplosion,
    ValidationError,
    Vpt,
    check_functional_bounded,
    co_accessible,
    enumerate_domain,
    fst_of,
    metrics,
    naive_eval,
    naive_outputs,
    parse_vpt,
    reach,
    reduce,
    reduce_with_map,
    serialize_vpt,
    step_runs,
    trim_fst,
    update_dconfigs,
    well_matched_summary,
    well_matched_witnesses,
)
from .streaming_eval import (
    EvalDag,
    EvalDiagnostic,
    EvalState,
    MemoryReport,
    NoInitialStates,
    PopOnEmpty,
    decode,
    finish,
    memory_snapshot,
    run_stream,
    start,
    step,
)
from .streamability import (
    Bounded,
    FstTwinWitness,
    InconsistentVerdicts,
    Outcome,
    SearchBounds,
    StreamabilityReport,
    Unbounded,
    Verdict,
    VptTwinWitness,
    check_bm,
    check_fst_twinning,
    check_htp,
    check_mtp,
    classify_streamability,
    domain_height_bounded,
    verify_fst_twinning_witness,
    verify_vpt_twinning_witness,
)

__version__ = "0.1.0"

__all__ = [
    "Bounded", "CallRule", "Configuration", "CounterExample",
    "DConfiguration", "DelayPair", "EmptySet", "EvalDag", "EvalDiagnostic",
    "EvalState", "FstMachine", "FstRule", "FstTwinWitness", "FunctionalUpTo",
    "InconsistentVerdicts", "InternalRule", "MachineMetrics", "MemoryReport",
    "NoInitialStates", "NotFunctionalWitness", "Outcome", "ParseError",
    "PopOnEmpty", "PremiseViolated", "ReturnRule", "ScanState",
    "SearchBounds", "StateExplosion", "StreamabilityReport",
    "StructuredAlphabet", "SymbolKind", "Unbounded", "UnknownSymbol",
    "ValidationError", "Verdict", "Vpt", "VptTwinWitness",
    "check_bm", "check_fst_twinning", "check_functional_bounded",
    "check_htp", "check_mtp", "classify", "classify_streamability",
    "co_accessible", "decode", "delay_mismatch", "delta", "delta_extend",
    "domain_height_bounded", "enumerate_domain", "finish", "fst_of",
    "is_well_nested", "lcp", "memory_snapshot", "metrics", "naive_eval",
    "naive_outputs", "parse_vpt", "reach", "reduce", "reduce_with_map",
    "run_stream", "scan", "serialize_vpt", "start", "step", "step_runs",
    "trim_fst", "update_dconfigs", "verify_fst_twinning_witness",
    "verify_vpt_twinning_witness", "well_matched_summary",
    "well_matched_witnesses",
]
