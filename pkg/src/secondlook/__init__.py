"""Second-look referral pipeline for chest X-ray reader annotations.

Core flow: ingest multi-reader annotation tables, fuse overlapping boxes per
lesion, simulate perceptual misses by removing fused boxes, compare detector
output against the remaining annotations (zero-overlap referral rule), and
score the referrals against the known misses. A small HTTP service exposes
the same referral semantics interactively.
"""

from .differential import (
    DEFAULT_CONFIDENCE_FLOOR,
    GATE_ABNORMAL,
    GATE_NORMAL,
    GATE_UNAVAILABLE,
    ReferralSet,
    compute_referrals,
    referral_pipeline,
)
from .errors import InputError, ProviderError, SecondLookError
from .evaluation import (
    DetectorEvaluation,
    FalseReferral,
    IouStatistics,
    Match,
    Metrics,
    OutcomeCounts,
    OutcomeLedger,
    classify_outcomes,
    compute_metrics,
    evaluate_detector,
    f1_score,
    iou_statistics,
)
from .fusion import DEFAULT_FUSION_IOU, FusedAnnotation, fuse
from .geometry import CANONICAL_FRAME, BBox, area, hull, intersection, iou, overlaps
from .ingestion import (
    ABNORMALITY_CLASSES,
    ANY_ABNORMALITY,
    NO_FINDING,
    CaseRecord,
    ParseResult,
    ReaderAnnotation,
    SplitManifest,
    balance_and_split,
    parse_annotations,
    read_dimensions,
    rescale,
)
from .providers import (
    DETECTION_REQUEST_SCHEMA,
    DETECTION_RESPONSE_SCHEMA,
    DetectorProviderConfig,
    JitterOracleProvider,
    RemoteEndpointProvider,
    StaticManifestProvider,
    StaticVerdictGate,
    build_gate,
    build_provider,
    gate_normalcy,
    get_detections,
)
from .simulation import (
    DEFAULT_MISS_FRACTION,
    ErrorCase,
    ErrorDataset,
    MissRecord,
    SimulationConfig,
    simulate,
    simulate_from_fused,
)
from .suppression import Detection, is_suppressed, suppress_zero_overlap

__version__ = "0.1.0"

__all__ = [
    "ABNORMALITY_CLASSES",
    "ANY_ABNORMALITY",
    "BBox",
    "CANONICAL_FRAME",
    "CaseRecord",
    "DEFAULT_CONFIDENCE_FLOOR",
    "DEFAULT_FUSION_IOU",
    "DEFAULT_MISS_FRACTION",
    "DETECTION_REQUEST_SCHEMA",
    "DETECTION_RESPONSE_SCHEMA",
    "Detection",
    "DetectorEvaluation",
    "DetectorProviderConfig",
    "ErrorCase",
    "ErrorDataset",
    "FalseReferral",
    "FusedAnnotation",
    "GATE_ABNORMAL",
    "GATE_NORMAL",
    "GATE_UNAVAILABLE",
    "InputError",
    "IouStatistics",
    "JitterOracleProvider",
    "Match",
    "Metrics",
    "MissRecord",
    "NO_FINDING",
    "OutcomeCounts",
    "OutcomeLedger",
    "ParseResult",
    "ProviderError",
    "ReaderAnnotation",
    "ReferralSet",
    "RemoteEndpointProvider",
    "SecondLookError",
    "SimulationConfig",
    "SplitManifest",
    "StaticManifestProvider",
    "StaticVerdictGate",
    "area",
    "balance_and_split",
    "build_gate",
    "build_provider",
    "classify_outcomes",
    "compute_metrics",
    "compute_referrals",
    "evaluate_detector",
    "f1_score",
    "fuse",
    "gate_normalcy",
    "get_detections",
    "hull",
    "intersection",
    "iou",
    "iou_statistics",
    "is_suppressed",
    "overlaps",
    "parse_annotations",
    "read_dimensions",
    "referral_pipeline",
    "rescale",
    "simulate",
    "simulate_from_fused",
    "suppress_zero_overlap",
]
