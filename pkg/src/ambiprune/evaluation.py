"""ECP-style detector evaluation.

Subset filtering by height/occlusion/truncation, confidence-swept greedy
IoU matching with ignore-region handling, miss-rate/FPPI curves, log-average
miss rate, and precision/recall/F1 at a fixed confidence threshold.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Sequence

from .errors import EvaluationError
from .model import BoundingBox, Dataset, Detection, ImageRecord, TagLevel, copy_dataset

DEFAULT_IOU_THRESHOLD = 0.5
DEFAULT_CONFIDENCE_THRESHOLD = 0.5
LAMR_FLOOR = 1e-10
# Reference FPPI values: 9 points log-uniform in [1e-2, 1e0].
LAMR_REFERENCE_FPPI = [10.0 ** (-2.0 + i / 4.0) for i in range(9)]


@dataclass(frozen=True)
class SubsetSpec:
    """Instance filter by pixel height and occlusion/truncation level.

    ``max_occlusion``/``max_truncation`` are exclusive upper bounds;
    ``min_occlusion`` (inclusive) selects an occlusion band.  Height bounds
    are strict unless ``height_inclusive``.
    """

    name: str
    min_height: float
    max_height: float | None = None
    height_inclusive: bool = False
    max_occlusion: TagLevel = TagLevel.GT80
    max_truncation: TagLevel = TagLevel.GT80
    min_occlusion: TagLevel | None = None

    def keeps(self, height: float, occlusion: TagLevel,
              truncation: TagLevel) -> bool:
        if self.height_inclusive:
            if height < self.min_height:
                return False
            if self.max_height is not None and height > self.max_height:
                return False
        else:
            if height <= self.min_height:
                return False
            if self.max_height is not None and height >= self.max_height:
                return False
        if occlusion >= self.max_occlusion:
            return False
        if self.min_occlusion is not None and occlusion < self.min_occlusion:
            return False
        if truncation >= self.max_truncation:
            return False
        return True


BUILTIN_SUBSETS: dict[str, SubsetSpec] = {
    "reasonable": SubsetSpec("reasonable", min_height=40,
                             max_occlusion=TagLevel.GT40,
                             max_truncation=TagLevel.GT40),
    "small": SubsetSpec("small", min_height=30, max_height=60,
                        height_inclusive=True,
                        max_occlusion=TagLevel.GT40,
                        max_truncation=TagLevel.GT40),
    "occluded": SubsetSpec("occluded", min_height=40,
                           min_occlusion=TagLevel.GT40,
                           max_occlusion=TagLevel.GT80,
                           max_truncation=TagLevel.GT80),
    "all": SubsetSpec("all", min_height=20,
                      max_occlusion=TagLevel.GT80,
                      max_truncation=TagLevel.GT80),
}


def get_subset(name: str) -> SubsetSpec:
    try:
        return BUILTIN_SUBSETS[name]
    except KeyError:
        raise EvaluationError(
            f"unknown subset {name!r}; expected one of "
            + ", ".join(BUILTIN_SUBSETS)
        ) from None


def apply_subset(dataset: Dataset, spec: SubsetSpec) -> Dataset:
    """Ignore-flag instances failing the subset criteria; never drop images."""
    result = copy_dataset(dataset)
    for image in result.images:
        image.instances = [
            instance if spec.keeps(instance.bbox.height, instance.occlusion,
                                   instance.truncation)
            else replace(instance, ignore=True)
            for instance in image.instances
        ]
    return result


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ix = min(a.x1, b.x1) - max(a.x0, b.x0)
    iy = min(a.y1, b.y1) - max(a.y0, b.y0)
    if ix <= 0 or iy <= 0:
        return 0.0
    intersection = ix * iy
    return intersection / (a.area() + b.area() - intersection)


class MatchStatus(enum.Enum):
    TP = "tp"
    FP = "fp"
    IGNORED = "ignored"


@dataclass(frozen=True)
class DetectionMatch:
    detection: Detection
    matched_instance_id: str | None
    status: MatchStatus


@dataclass
class ImageMatches:
    """Greedy match outcome for one image, detections in processing order.

    Processing order is descending confidence (input order on ties), so any
    confidence cutoff corresponds to a prefix of ``matches``.
    """

    image_id: str
    matches: list[DetectionMatch]
    gt_count: int  # non-ignore instances

    def fn_ids(self, min_confidence: float = 0.0) -> set[str]:
        matched = {m.matched_instance_id for m in self.matches
                   if m.status is MatchStatus.TP
                   and m.detection.confidence >= min_confidence}
        return self._gt_ids - matched

    _gt_ids: set[str] = field(default_factory=set)


@dataclass
class MatchResult:
    """Per-image detection assignments plus the unmatched ground truth."""

    images: list[ImageMatches]

    def counts(self) -> dict[str, int]:
        tp = fp = ignored = 0
        gt = 0
        for image in self.images:
            gt += image.gt_count
            for m in image.matches:
                if m.status is MatchStatus.TP:
                    tp += 1
                elif m.status is MatchStatus.FP:
                    fp += 1
                else:
                    ignored += 1
        return {"tp": tp, "fp": fp, "ignored": ignored, "fn": gt - tp}

    def fn_ids(self) -> set[str]:
        result: set[str] = set()
        for image in self.images:
            result |= image.fn_ids()
        return result


def _sorted_detections(detections: Sequence[Detection]) -> list[Detection]:
    # Stable sort keeps input order for equal confidences.
    return sorted(detections, key=lambda d: -d.confidence)


def _match_image(image: ImageRecord, detections: Sequence[Detection],
                 iou_threshold: float) -> ImageMatches:
    active = [i for i in image.instances if not i.ignore]
    ignored_boxes = [i.bbox for i in image.instances if i.ignore]
    matched: set[int] = set()
    matches: list[DetectionMatch] = []
    for detection in _sorted_detections(detections):
        best_index = -1
        best_iou = 0.0
        for index, instance in enumerate(active):
            if index in matched:
                continue
            overlap = iou(detection.bbox, instance.bbox)
            if overlap >= iou_threshold and overlap > best_iou:
                best_index = index
                best_iou = overlap
        if best_index >= 0:
            matched.add(best_index)
            matches.append(DetectionMatch(detection, active[best_index].id,
                                          MatchStatus.TP))
            continue
        if any(iou(detection.bbox, box) >= iou_threshold
               for box in ignored_boxes):
            matches.append(DetectionMatch(detection, None, MatchStatus.IGNORED))
        else:
            matches.append(DetectionMatch(detection, None, MatchStatus.FP))
    result = ImageMatches(image_id=image.image_id, matches=matches,
                          gt_count=len(active))
    result._gt_ids = {i.id for i in active}
    return result


def _group_detections(dataset: Dataset,
                      detections: Sequence[Detection]) -> dict[str, list[Detection]]:
    known = {image.image_id for image in dataset.images}
    grouped: dict[str, list[Detection]] = {image_id: [] for image_id in known}
    for detection in detections:
        if detection.image_id not in known:
            raise EvaluationError(
                f"detection references unknown image_id {detection.image_id!r}"
            )
        grouped[detection.image_id].append(detection)
    return grouped


def match(dataset: Dataset, detections: Sequence[Detection],
          iou_threshold: float = DEFAULT_IOU_THRESHOLD,
          jobs: int = 1) -> MatchResult:
    """Greedy confidence-ordered IoU matching over all images."""
    grouped = _group_detections(dataset, detections)

    def run(image: ImageRecord) -> ImageMatches:
        return _match_image(image, grouped[image.image_id], iou_threshold)

    if jobs > 1 and len(dataset.images) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_image = list(pool.map(run, dataset.images))
    else:
        per_image = [run(image) for image in dataset.images]
    # per_image follows dataset image order, so the reduction is deterministic
    # regardless of worker count.
    return MatchResult(images=per_image)


@dataclass
class MrFppiCurve:
    """Miss rate vs. false positives per image, one point per cutoff."""

    points: list[tuple[float, float]]  # (fppi, miss_rate), fppi ascending

    def miss_rate_at(self, fppi: float) -> float:
        """Miss rate of the point with the largest FPPI <= ``fppi``, else 1."""
        best = 1.0
        for point_fppi, miss_rate in self.points:
            if point_fppi <= fppi:
                best = miss_rate
            else:
                break
        return best


def mr_fppi_curve(dataset: Dataset, detections: Sequence[Detection],
                  iou_threshold: float = DEFAULT_IOU_THRESHOLD,
                  jobs: int = 1) -> MrFppiCurve:
    """Sweep the confidence cutoff over all distinct detection scores."""
    image_count = len(dataset.images)
    if image_count == 0:
        raise EvaluationError("dataset has no images; FPPI undefined")
    result = match(dataset, detections, iou_threshold, jobs=jobs)
    gt_count = sum(image.gt_count for image in result.images)
    if gt_count == 0:
        raise EvaluationError("no non-ignore ground truth; miss rate undefined")

    thresholds = sorted({m.detection.confidence
                         for image in result.images for m in image.matches},
                        reverse=True)
    raw_points: list[tuple[float, float]] = []
    for cutoff in thresholds:
        tp = fp = 0
        for image in result.images:
            for m in image.matches:
                if m.detection.confidence < cutoff:
                    break
                if m.status is MatchStatus.TP:
                    tp += 1
                elif m.status is MatchStatus.FP:
                    fp += 1
        raw_points.append((fp / image_count, (gt_count - tp) / gt_count))
    if not raw_points:
        return MrFppiCurve(points=[(0.0, 1.0)])

    # Collapse equal-FPPI points to the lowest miss rate; sweeping already
    # yields ascending fppi / non-increasing miss rate.
    collapsed: dict[float, float] = {}
    for fppi, miss_rate in raw_points:
        collapsed[fppi] = min(miss_rate, collapsed.get(fppi, 1.0))
    return MrFppiCurve(points=sorted(collapsed.items()))


def lamr(curve: MrFppiCurve) -> float:
    """Log-average miss rate over the 9 reference FPPI points."""
    if not curve.points:
        raise EvaluationError("empty miss-rate curve")
    log_sum = 0.0
    for reference in LAMR_REFERENCE_FPPI:
        sample = curve.miss_rate_at(reference)
        if sample == 0.0:
            sample = LAMR_FLOOR
        log_sum += math.log(sample)
    return math.exp(log_sum / len(LAMR_REFERENCE_FPPI))


@dataclass
class PrfResult:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    degenerate_precision: bool = False


def prf(dataset: Dataset, detections: Sequence[Detection],
        iou_threshold: float = DEFAULT_IOU_THRESHOLD,
        confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
        jobs: int = 1) -> PrfResult:
    """Precision/recall/F1 for detections at or above the confidence cutoff."""
    kept = [d for d in detections if d.confidence >= confidence_threshold]
    result = match(dataset, kept, iou_threshold, jobs=jobs)
    counts = result.counts()
    tp, fp, fn = counts["tp"], counts["fp"], counts["fn"]
    if tp + fn == 0:
        raise EvaluationError("no non-ignore ground truth; recall undefined")
    degenerate = tp + fp == 0
    precision = 1.0 if degenerate else tp / (tp + fp)
    recall = tp / (tp + fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return PrfResult(precision=precision, recall=recall, f1=f1,
                     tp=tp, fp=fp, fn=fn, degenerate_precision=degenerate)


@dataclass
class EvalResult:
    """Full evaluation output for one (dataset, detections, subset) triple."""

    subset: str
    lamr: float
    lamr_floor: bool
    curve: MrFppiCurve
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    dataset_provenance: list[dict[str, Any]]
    degenerate_precision: bool = False

    def to_dict(self) -> dict[str, Any]:
        return {
            "subset": self.subset,
            "lamr": self.lamr,
            "lamr_floor": self.lamr_floor,
            "curve": [[fppi, miss_rate] for fppi, miss_rate in self.curve.points],
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "degenerate_precision": self.degenerate_precision,
            "dataset_provenance": self.dataset_provenance,
        }


def evaluate(dataset: Dataset, detections: Sequence[Detection],
             subset: SubsetSpec | str = "all",
             iou_threshold: float = DEFAULT_IOU_THRESHOLD,
             confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
             identity: str = "pedestrian",
             jobs: int = 1) -> EvalResult:
    """Evaluate ``detections`` against ``dataset`` on one subset."""
    spec = get_subset(subset) if isinstance(subset, str) else subset
    filtered = apply_subset(dataset, spec)
    kept = [d for d in detections if d.identity == identity]
    curve = mr_fppi_curve(filtered, kept, iou_threshold, jobs=jobs)
    lamr_value = lamr(curve)
    prf_result = prf(filtered, kept, iou_threshold, confidence_threshold,
                     jobs=jobs)
    return EvalResult(
        subset=spec.name,
        lamr=lamr_value,
        lamr_floor=lamr_value <= LAMR_FLOOR * (1.0 + 1e-6),
        curve=curve,
        precision=prf_result.precision,
        recall=prf_result.recall,
        f1=prf_result.f1,
        tp=prf_result.tp,
        fp=prf_result.fp,
        fn=prf_result.fn,
        dataset_provenance=dataset.provenance,
        degenerate_precision=prf_result.degenerate_precision,
    )
