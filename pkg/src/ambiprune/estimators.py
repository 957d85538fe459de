"""Scikit-learn style wrappers around the engine functions.

Each transformer consumes and produces :class:`~ambiprune.model.Dataset`
values, so pipelines can chain scoring, subset filtering, and pruning, and
``get_params``/``set_params`` work for grid-style threshold sweeps.
"""

from __future__ import annotations

from typing import Sequence

from sklearn.base import BaseEstimator, TransformerMixin

from .ambiguity import score_dataset
from .evaluation import (
    DEFAULT_CONFIDENCE_THRESHOLD,
    DEFAULT_IOU_THRESHOLD,
    EvalResult,
    apply_subset,
    evaluate,
    get_subset,
)
from .model import Dataset, Detection
from .pruning import prune


def _check_dataset(X) -> Dataset:
    if not isinstance(X, Dataset):
        raise TypeError(f"expected a Dataset, got {type(X).__name__}")
    return X


class AmbiguityScorer(BaseEstimator, TransformerMixin):
    """Populate instance ambiguity scores from annotator answer counts."""

    def __init__(self, overwrite: bool = False):
        self.overwrite = overwrite

    def fit(self, X: Dataset, y=None):
        _check_dataset(X)
        return self

    def transform(self, X: Dataset) -> Dataset:
        return score_dataset(_check_dataset(X), overwrite=self.overwrite)


class SubsetFilter(BaseEstimator, TransformerMixin):
    """Ignore-flag instances outside a named evaluation subset."""

    def __init__(self, subset: str = "reasonable"):
        self.subset = subset

    def fit(self, X: Dataset, y=None):
        _check_dataset(X)
        get_subset(self.subset)
        return self

    def transform(self, X: Dataset) -> Dataset:
        return apply_subset(_check_dataset(X), get_subset(self.subset))


class DatasetPruner(BaseEstimator, TransformerMixin):
    """Prune instances with ambiguity at or above a threshold.

    The report of the last ``transform`` is kept in ``report_``.
    """

    def __init__(self, threshold: float = 0.65, mode: str = "ignore"):
        self.threshold = threshold
        self.mode = mode

    def fit(self, X: Dataset, y=None):
        _check_dataset(X)
        return self

    def transform(self, X: Dataset) -> Dataset:
        pruned, report = prune(_check_dataset(X), self.threshold, self.mode)
        self.report_ = report
        return pruned


class DetectionEvaluator(BaseEstimator):
    """Evaluate detections against a fitted ground-truth dataset."""

    def __init__(self, subset: str = "all",
                 iou_threshold: float = DEFAULT_IOU_THRESHOLD,
                 confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
                 identity: str = "pedestrian", jobs: int = 1):
        self.subset = subset
        self.iou_threshold = iou_threshold
        self.confidence_threshold = confidence_threshold
        self.identity = identity
        self.jobs = jobs

    def fit(self, X: Dataset, y=None):
        self.dataset_ = _check_dataset(X)
        return self

    def predict(self, detections: Sequence[Detection]) -> EvalResult:
        if not hasattr(self, "dataset_"):
            raise RuntimeError("DetectionEvaluator must be fitted first")
        return evaluate(
            self.dataset_, detections,
            subset=self.subset,
            iou_threshold=self.iou_threshold,
            confidence_threshold=self.confidence_threshold,
            identity=self.identity,
            jobs=self.jobs,
        )

    def score(self, detections: Sequence[Detection]) -> float:
        """Negated LAMR, so higher is better as sklearn expects."""
        return -self.predict(detections).lamr
