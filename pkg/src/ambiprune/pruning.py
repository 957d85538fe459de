"""Ambiguity-threshold pruning and representativeness reporting."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Any

from .errors import PruningError
from .evaluation import BUILTIN_SUBSETS
from .model import Dataset, Instance, TagLevel, copy_dataset

OVERPRUNE_FACTOR = 2.0


@dataclass
class PruneReport:
    """Outcome of one pruning pass, including per-tag removal rates."""

    threshold: float
    mode: str
    removed_count: int
    kept_count: int
    occlusion_removal_rates: dict[TagLevel, float]
    truncation_removal_rates: dict[TagLevel, float]
    subset_retained_counts: dict[str, int]
    overpruned_tags: list[str]

    @property
    def overall_removal_rate(self) -> float:
        total = self.removed_count + self.kept_count
        return self.removed_count / total if total else 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "threshold": self.threshold,
            "mode": self.mode,
            "removed_count": self.removed_count,
            "kept_count": self.kept_count,
            "overall_removal_rate": self.overall_removal_rate,
            "occlusion_removal_rates": {
                level.to_string(): rate
                for level, rate in self.occlusion_removal_rates.items()
            },
            "truncation_removal_rates": {
                level.to_string(): rate
                for level, rate in self.truncation_removal_rates.items()
            },
            "subset_retained_counts": self.subset_retained_counts,
            "overpruned_tags": self.overpruned_tags,
        }


def _require_scored(dataset: Dataset) -> None:
    unscored = [instance.id for _, instance in dataset.iter_instances()
                if instance.ambiguity is None]
    if unscored:
        raise PruningError("unscored instances: " + ", ".join(unscored))


def _subset_retained_counts(dataset: Dataset) -> dict[str, int]:
    counts = {name: 0 for name in BUILTIN_SUBSETS}
    for _, instance in dataset.iter_instances():
        if instance.ignore:
            continue
        for name, spec in BUILTIN_SUBSETS.items():
            if spec.keeps(instance.bbox.height, instance.occlusion,
                          instance.truncation):
                counts[name] += 1
    return counts


def _removal_report(threshold: float, mode: str, before: list[Instance],
                    removed: set[str],
                    after: Dataset | None = None,
                    factor: float = OVERPRUNE_FACTOR) -> PruneReport:
    removed_count = len(removed)
    kept_count = len(before) - removed_count

    def rates(family: str) -> dict[TagLevel, float]:
        totals = {level: 0 for level in TagLevel}
        hits = {level: 0 for level in TagLevel}
        for instance in before:
            level = getattr(instance, family)
            totals[level] += 1
            if instance.id in removed:
                hits[level] += 1
        return {level: hits[level] / totals[level] if totals[level] else 0.0
                for level in TagLevel}

    occlusion_rates = rates("occlusion")
    truncation_rates = rates("truncation")
    overall = removed_count / len(before) if before else 0.0
    overpruned = []
    for family, family_rates in (("occlusion", occlusion_rates),
                                 ("truncation", truncation_rates)):
        for level, rate in family_rates.items():
            if overall > 0 and rate > factor * overall:
                overpruned.append(f"{family}:{level.to_string()}")
    return PruneReport(
        threshold=threshold,
        mode=mode,
        removed_count=removed_count,
        kept_count=kept_count,
        occlusion_removal_rates=occlusion_rates,
        truncation_removal_rates=truncation_rates,
        subset_retained_counts=(_subset_retained_counts(after)
                                if after is not None else {}),
        overpruned_tags=overpruned,
    )


def prune(dataset: Dataset, threshold: float,
          mode: str = "ignore") -> tuple[Dataset, PruneReport]:
    """Remove or ignore-flag all instances with ambiguity >= ``threshold``.

    The boundary is inclusive: a score exactly equal to the threshold is
    pruned.  Images are kept even when left empty so FPPI denominators do
    not change.
    """
    if not 0.0 <= threshold <= 1.0:
        raise PruningError(f"threshold {threshold} outside [0, 1]")
    if mode not in ("delete", "ignore"):
        raise PruningError(f"unknown prune mode {mode!r}")
    _require_scored(dataset)

    before = [instance for _, instance in dataset.iter_instances()]
    removed = {instance.id for instance in before
               if instance.ambiguity >= threshold}

    result = copy_dataset(dataset)
    for image in result.images:
        if mode == "delete":
            image.instances = [i for i in image.instances
                               if i.id not in removed]
        else:
            image.instances = [replace(i, ignore=True) if i.id in removed else i
                               for i in image.instances]
    result.provenance.append({"op": "prune", "threshold": threshold,
                              "mode": mode, "label": f"Amb {threshold:g}"})
    report = _removal_report(threshold, mode, before, removed, after=result)
    return result, report


def representativeness_report(before: Dataset, after: Dataset,
                              factor: float = OVERPRUNE_FACTOR) -> PruneReport:
    """Per-tag removal rates between a dataset and its pruned derivative.

    Tag levels removed at more than ``factor`` times the overall rate are
    flagged as over-pruned.
    """
    if after.provenance[:len(before.provenance)] != before.provenance:
        raise PruningError(
            "provenance mismatch: 'after' does not derive from 'before'"
        )
    prune_ops = [entry for entry in after.provenance[len(before.provenance):]
                 if entry.get("op") == "prune"]
    threshold = prune_ops[-1]["threshold"] if prune_ops else float("nan")
    mode = prune_ops[-1]["mode"] if prune_ops else "delete"

    before_instances = [instance for _, instance in before.iter_instances()]
    surviving = {instance.id for _, instance in after.iter_instances()
                 if not instance.ignore}
    ignored_before = {instance.id for instance in before_instances
                      if instance.ignore}
    removed = {instance.id for instance in before_instances
               if instance.id not in surviving
               and instance.id not in ignored_before}
    return _removal_report(threshold, mode, before_instances, removed,
                           after=after, factor=factor)
