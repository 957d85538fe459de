"""sklearn-style wrapper behaviour: params, pipelines, engine equivalence."""

from __future__ import annotations

import pytest
from sklearn.pipeline import Pipeline

from ambiprune.ambiguity import score_dataset
from ambiprune.estimators import (
    AmbiguityScorer,
    DatasetPruner,
    DetectionEvaluator,
    SubsetFilter,
)
from ambiprune.evaluation import evaluate
from ambiprune.model import AnnotatorAnswers
from ambiprune.pruning import prune
from conftest import detection_for, make_dataset, make_instance


@pytest.fixture
def answer_dataset():
    return make_dataset([[
        make_instance("a", answers=AnnotatorAnswers(5, 0, 0)),
        make_instance("b", x0=100, answers=AnnotatorAnswers(2, 2, 0)),
    ]])


def test_scorer_matches_engine(answer_dataset):
    transformed = AmbiguityScorer().fit_transform(answer_dataset)
    assert transformed == score_dataset(answer_dataset)


def test_get_set_params():
    pruner = DatasetPruner()
    assert pruner.get_params() == {"threshold": 0.65, "mode": "ignore"}
    pruner.set_params(threshold=0.5)
    assert pruner.threshold == 0.5


def test_pruner_stores_report(answer_dataset):
    pruner = DatasetPruner(threshold=0.5, mode="delete")
    pruned = pruner.fit_transform(score_dataset(answer_dataset))
    assert pruned.instance_count() == 1
    assert pruner.report_.removed_count == 1


def test_pipeline_score_then_prune(answer_dataset):
    pipeline = Pipeline([
        ("score", AmbiguityScorer()),
        ("prune", DatasetPruner(threshold=0.5, mode="ignore")),
    ])
    result = pipeline.fit_transform(answer_dataset)
    expected, _ = prune(score_dataset(answer_dataset), 0.5, mode="ignore")
    assert result == expected


def test_subset_filter(answer_dataset):
    filtered = SubsetFilter(subset="reasonable").fit_transform(answer_dataset)
    assert all(not i.ignore for _, i in filtered.iter_instances())


def test_evaluator_matches_engine():
    instance = make_instance("gt0")
    dataset = make_dataset([[instance]])
    detections = [detection_for("img0", instance)]
    evaluator = DetectionEvaluator(subset="all").fit(dataset)
    assert evaluator.predict(detections).to_dict() == \
        evaluate(dataset, detections, subset="all").to_dict()
    assert evaluator.score(detections) == pytest.approx(-1e-10)


def test_type_check():
    with pytest.raises(TypeError):
        AmbiguityScorer().fit_transform([[1, 2], [3, 4]])
