"""Shared fixture builders for the test suite."""

from __future__ import annotations

import itertools

import pytest

from ambiprune.model import (
    AnnotatorAnswers,
    BoundingBox,
    Dataset,
    Detection,
    ImageRecord,
    Instance,
    TagLevel,
)


def make_instance(instance_id="i0", x0=10.0, y0=10.0, width=20.0, height=50.0,
                  identity="pedestrian", occlusion=TagLevel.NONE,
                  truncation=TagLevel.NONE, answers=None, ambiguity=None,
                  ignore=False) -> Instance:
    return Instance(
        id=instance_id,
        bbox=BoundingBox(x0, y0, x0 + width, y0 + height),
        identity=identity,
        occlusion=occlusion,
        truncation=truncation,
        answers=answers,
        ambiguity=ambiguity,
        ignore=ignore,
    )


def make_dataset(instances_per_image, name="test",
                 width=640, height=480) -> Dataset:
    """Build a dataset from a list of per-image instance lists."""
    images = [
        ImageRecord(image_id=f"img{i}", width=width, height=height,
                    instances=list(instances))
        for i, instances in enumerate(instances_per_image)
    ]
    return Dataset(name=name, images=images)


def detection_for(image_id: str, instance: Instance,
                  confidence: float = 0.9, shift: float = 0.0) -> Detection:
    bbox = instance.bbox
    return Detection(
        image_id=image_id,
        bbox=BoundingBox(bbox.x0 + shift, bbox.y0, bbox.x1 + shift, bbox.y1),
        confidence=confidence,
        identity=instance.identity,
    )


def oracle_max_tp(gt_boxes, det_boxes, iou_threshold, iou_fn):
    """Exhaustive maximum-assignment TP count for one image (small inputs)."""
    feasible = [
        [j for j, gt in enumerate(gt_boxes)
         if iou_fn(det, gt) >= iou_threshold]
        for det in det_boxes
    ]
    best = 0
    n_det = len(det_boxes)
    for assignment in itertools.product(
            *[options + [None] for options in feasible]):
        chosen = [a for a in assignment if a is not None]
        if len(set(chosen)) == len(chosen):
            best = max(best, len(chosen))
    return best if n_det else 0


@pytest.fixture
def scored_dataset() -> Dataset:
    """Four scored instances across two images, mixed tags."""
    return make_dataset([
        [make_instance("a", ambiguity=0.2),
         make_instance("b", x0=100, ambiguity=0.5,
                       occlusion=TagLevel.GT10)],
        [make_instance("c", ambiguity=0.7, occlusion=TagLevel.GT40),
         make_instance("d", x0=100, ambiguity=0.9,
                       occlusion=TagLevel.GT80,
                       truncation=TagLevel.GT10)],
    ])
