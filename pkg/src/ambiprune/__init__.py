"""Annotation-ambiguity scoring, dataset pruning, and detection evaluation."""

from .ambiguity import AmbiguityHistogram, ambiguity, histogram, score_dataset
from .errors import (
    AmbiPruneError,
    EvaluationError,
    ParseError,
    PruningError,
    ScoringError,
    ValidationError,
)
from .estimators import (
    AmbiguityScorer,
    DatasetPruner,
    DetectionEvaluator,
    SubsetFilter,
)
from .evaluation import (
    BUILTIN_SUBSETS,
    EvalResult,
    MrFppiCurve,
    SubsetSpec,
    apply_subset,
    evaluate,
    iou,
    lamr,
    match,
    mr_fppi_curve,
    prf,
)
from .model import (
    AnnotatorAnswers,
    BoundingBox,
    Dataset,
    Detection,
    ImageRecord,
    Instance,
    TagLevel,
    load_dataset,
    load_detections,
    save_dataset,
)
from .pruning import PruneReport, prune, representativeness_report

__version__ = "0.1.0"

__all__ = [
    "AmbiPruneError", "AmbiguityHistogram", "AmbiguityScorer",
    "AnnotatorAnswers", "BUILTIN_SUBSETS", "BoundingBox", "Dataset",
    "DatasetPruner", "Detection", "DetectionEvaluator", "EvalResult",
    "EvaluationError", "ImageRecord", "Instance", "MrFppiCurve", "ParseError",
    "PruneReport", "PruningError", "ScoringError", "SubsetFilter",
    "SubsetSpec", "TagLevel", "ValidationError", "ambiguity", "apply_subset",
    "evaluate", "histogram", "iou", "lamr", "load_dataset", "load_detections",
    "match", "mr_fppi_curve", "prf", "prune", "representativeness_report",
    "save_dataset", "score_dataset",
]
