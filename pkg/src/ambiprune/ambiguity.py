"""Ambiguity scoring from annotator answer counts.

The score of an instance is 0 for unanimous agreement, 1 for a uniform
yes/no split or an all-unsure answer set, and scales in between with the
distance of the observed answer distribution from uniform, damped by the
fraction of unsure answers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

from .errors import ScoringError
from .model import AnnotatorAnswers, Dataset, TagLevel, copy_dataset

DEFAULT_BINS = 20


def ambiguity(answers: AnnotatorAnswers) -> float:
    """Ambiguity score in [0, 1] for one instance's answer counts."""
    n = answers.total
    if n == 0:
        raise ScoringError("empty answer set")
    decided = n - answers.n_unsure
    if decided <= 0:
        return 1.0
    gamma = 1.0 - answers.n_unsure / n
    value = 1.0 - gamma * 2.0 * abs(answers.n_yes / decided - 0.5)
    # Guard against float round-off at the interval ends.
    return min(1.0, max(0.0, value))


def score_dataset(dataset: Dataset, overwrite: bool = False) -> Dataset:
    """Return a copy of ``dataset`` with ambiguity populated from answers.

    Precomputed scores are kept unless ``overwrite`` is set.  Instances with
    neither answers nor a precomputed score make scoring fail.
    """
    unscorable = [
        instance.id for _, instance in dataset.iter_instances()
        if instance.answers is None and instance.ambiguity is None
    ]
    if unscorable:
        raise ScoringError(
            "instances without answers or precomputed ambiguity: "
            + ", ".join(unscorable)
        )
    result = copy_dataset(dataset)
    for image in result.images:
        image.instances = [
            replace(instance, ambiguity=ambiguity(instance.answers))
            if instance.answers is not None
            and (overwrite or instance.ambiguity is None)
            else instance
            for instance in image.instances
        ]
    result.provenance.append({"op": "scored", "overwrite": overwrite})
    return result


@dataclass
class AmbiguityHistogram:
    """Equal-width ambiguity histogram with per-bin tag-level proportions."""

    bin_edges: list[float]
    counts: list[int]
    occlusion_proportions: dict[TagLevel, list[float]]
    truncation_proportions: dict[TagLevel, list[float]]

    @property
    def bins(self) -> int:
        return len(self.counts)

    def peak_bin(self, family: str, level: TagLevel) -> int:
        """Index of the bin where ``level``'s proportion is highest."""
        proportions = (self.occlusion_proportions if family == "occlusion"
                       else self.truncation_proportions)[level]
        return max(range(self.bins), key=lambda i: proportions[i])

    def to_dict(self) -> dict:
        return {
            "bin_edges": self.bin_edges,
            "counts": self.counts,
            "occlusion_proportions": {
                level.to_string(): values
                for level, values in self.occlusion_proportions.items()
            },
            "truncation_proportions": {
                level.to_string(): values
                for level, values in self.truncation_proportions.items()
            },
            "peak_bins": {
                "occlusion": {level.to_string(): self.peak_bin("occlusion", level)
                              for level in TagLevel},
                "truncation": {level.to_string(): self.peak_bin("truncation", level)
                               for level in TagLevel},
            },
        }


def bin_index(value: float, bins: int) -> int:
    """Bin of ``value`` in ``bins`` equal-width bins over [0, 1], right-closed."""
    index = int(value * bins)
    return min(index, bins - 1)


def histogram(dataset: Dataset, bins: int = DEFAULT_BINS) -> AmbiguityHistogram:
    """Histogram of ambiguity scores with per-bin tag-level proportions."""
    if bins < 1:
        raise ScoringError(f"bin count must be >= 1, got {bins}")
    unscored = [instance.id for _, instance in dataset.iter_instances()
                if instance.ambiguity is None]
    if unscored:
        raise ScoringError("unscored instances: " + ", ".join(unscored))

    counts = [0] * bins
    occlusion_counts = {level: [0] * bins for level in TagLevel}
    truncation_counts = {level: [0] * bins for level in TagLevel}
    for _, instance in dataset.iter_instances():
        index = bin_index(instance.ambiguity, bins)
        counts[index] += 1
        occlusion_counts[instance.occlusion][index] += 1
        truncation_counts[instance.truncation][index] += 1

    def proportions(per_level: dict[TagLevel, list[int]]) -> dict[TagLevel, list[float]]:
        return {
            level: [per_level[level][i] / counts[i] if counts[i] else 0.0
                    for i in range(bins)]
            for level in TagLevel
        }

    return AmbiguityHistogram(
        bin_edges=[i / bins for i in range(bins + 1)],
        counts=counts,
        occlusion_proportions=proportions(occlusion_counts),
        truncation_proportions=proportions(truncation_counts),
    )


def score_summary(dataset: Dataset) -> dict:
    """Count, mean and quartiles of the ambiguity scores in ``dataset``."""
    scores = sorted(instance.ambiguity for _, instance in dataset.iter_instances()
                    if instance.ambiguity is not None)
    if not scores:
        return {"scored": 0, "mean": None, "quantiles": {}}

    def quantile(q: float) -> float:
        position = q * (len(scores) - 1)
        low = int(position)
        high = min(low + 1, len(scores) - 1)
        return scores[low] + (scores[high] - scores[low]) * (position - low)

    return {
        "scored": len(scores),
        "mean": sum(scores) / len(scores),
        "quantiles": {"p25": quantile(0.25), "p50": quantile(0.5),
                      "p75": quantile(0.75), "p95": quantile(0.95)},
    }


def top_ambiguous(dataset: Dataset, k: int) -> list[tuple[str, float]]:
    """The ``k`` highest-ambiguity instance ids, descending score."""
    scored = [(instance.id, instance.ambiguity)
              for _, instance in dataset.iter_instances()
              if instance.ambiguity is not None]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored[:k]


def apply_score_records(dataset: Dataset, records: Iterable[dict]) -> Dataset:
    """Attach imported scores/answers (JSON-lines records) to instances."""
    by_id: dict[str, dict] = {}
    for record in records:
        by_id[str(record["instance_id"])] = record
    result = copy_dataset(dataset)
    for image in result.images:
        updated = []
        for instance in image.instances:
            record = by_id.get(instance.id)
            if record is None:
                updated.append(instance)
            elif "answers" in record:
                answers = AnnotatorAnswers(
                    int(record["answers"].get("yes", 0)),
                    int(record["answers"].get("no", 0)),
                    int(record["answers"].get("unsure", 0)),
                )
                updated.append(replace(instance, answers=answers,
                                       ambiguity=ambiguity(answers)))
            else:
                updated.append(replace(instance,
                                       ambiguity=float(record["ambiguity"])))
        image.instances = updated
    return result
