"""Data model and file formats for ground truth and detections.

The native dataset format is a single JSON file per dataset.  An importer
for ECP-style per-image annotation files ("children" records with tag
strings such as ``"occluded>40"``) is provided via ``format="ecp"``.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ParseError, ValidationError

logger = logging.getLogger("ambiprune")


class TagLevel(enum.IntEnum):
    """Ordered occlusion/truncation level: none < >10% < >40% < >80%."""

    NONE = 0
    GT10 = 1
    GT40 = 2
    GT80 = 3

    @classmethod
    def from_string(cls, value: str) -> "TagLevel":
        try:
            return _TAG_FROM_STR[value]
        except KeyError:
            raise ValidationError(f"unknown tag level {value!r}") from None

    def to_string(self) -> str:
        return _TAG_TO_STR[self]


_TAG_FROM_STR = {"none": TagLevel.NONE, "gt10": TagLevel.GT10,
                 "gt40": TagLevel.GT40, "gt80": TagLevel.GT80}
_TAG_TO_STR = {v: k for k, v in _TAG_FROM_STR.items()}

# Tag strings found in ECP-style exports, mapped to ordered levels.
ECP_TAG_MAP = {
    "occluded>10": ("occlusion", TagLevel.GT10),
    "occluded>40": ("occlusion", TagLevel.GT40),
    "occluded>80": ("occlusion", TagLevel.GT80),
    "truncated>10": ("truncation", TagLevel.GT10),
    "truncated>40": ("truncation", TagLevel.GT40),
    "truncated>80": ("truncation", TagLevel.GT80),
}


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, origin top-left."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValidationError(
                f"bbox must have positive extent, got "
                f"({self.x0}, {self.y0}, {self.x1}, {self.y1})"
            )

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def area(self) -> float:
        return self.width * self.height

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True)
class AnnotatorAnswers:
    """Counts of yes / no / unsure answers to "is this a human being?"."""

    n_yes: int
    n_no: int
    n_unsure: int

    def __post_init__(self) -> None:
        if min(self.n_yes, self.n_no, self.n_unsure) < 0:
            raise ValidationError("answer counts must be non-negative")
        if self.total == 0:
            raise ValidationError("answer counts must sum to at least 1")

    @property
    def total(self) -> int:
        return self.n_yes + self.n_no + self.n_unsure


@dataclass(frozen=True)
class Instance:
    """One annotated object in an image."""

    id: str
    bbox: BoundingBox
    identity: str = "pedestrian"
    occlusion: TagLevel = TagLevel.NONE
    truncation: TagLevel = TagLevel.NONE
    answers: AnnotatorAnswers | None = None
    ambiguity: float | None = None
    ignore: bool = False
    raw_tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.ambiguity is not None and not 0.0 <= self.ambiguity <= 1.0:
            raise ValidationError(
                f"instance {self.id!r}: ambiguity {self.ambiguity} outside [0, 1]"
            )


@dataclass
class ImageRecord:
    """One image and its annotated instances."""

    image_id: str
    width: int
    height: int
    instances: list[Instance] = field(default_factory=list)
    image_path: str | None = None


@dataclass
class Dataset:
    """A named collection of image records, with pruning/scoring provenance."""

    name: str
    images: list[ImageRecord] = field(default_factory=list)
    provenance: list[dict[str, Any]] = field(default_factory=list)

    def iter_instances(self):
        for image in self.images:
            for instance in image.instances:
                yield image, instance

    def instance_count(self) -> int:
        return sum(len(image.instances) for image in self.images)

    def find_instance(self, instance_id: str) -> tuple[ImageRecord, Instance] | None:
        for image, instance in self.iter_instances():
            if instance.id == instance_id:
                return image, instance
        return None


@dataclass(frozen=True)
class Detection:
    """One detector output for one image."""

    image_id: str
    bbox: BoundingBox
    confidence: float
    identity: str = "pedestrian"

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError(
                f"detection on {self.image_id!r}: confidence "
                f"{self.confidence} outside [0, 1]"
            )


def _clamp_bbox(bbox: BoundingBox, width: int, height: int,
                instance_id: str) -> BoundingBox:
    x0 = min(max(bbox.x0, 0.0), float(width))
    y0 = min(max(bbox.y0, 0.0), float(height))
    x1 = min(max(bbox.x1, 0.0), float(width))
    y1 = min(max(bbox.y1, 0.0), float(height))
    if (x0, y0, x1, y1) != (bbox.x0, bbox.y0, bbox.x1, bbox.y1):
        logger.warning("instance %s: bbox clamped to image bounds", instance_id)
        if not (x1 > x0 and y1 > y0):
            raise ValidationError(
                f"instance {instance_id!r}: bbox lies outside the image"
            )
        return BoundingBox(x0, y0, x1, y1)
    return bbox


def _instance_from_dict(raw: dict[str, Any], width: int, height: int) -> Instance:
    try:
        instance_id = str(raw["id"])
        coords = raw["bbox"]
    except KeyError as exc:
        raise ParseError(f"instance record missing field {exc}") from None
    if not (isinstance(coords, list) and len(coords) == 4):
        raise ParseError(f"instance {instance_id!r}: bbox must be [x0, y0, x1, y1]")
    try:
        bbox = BoundingBox(*[float(c) for c in coords])
    except ValidationError as exc:
        raise ValidationError(f"instance {instance_id!r}: {exc}") from None
    bbox = _clamp_bbox(bbox, width, height, instance_id)

    answers = None
    if raw.get("answers") is not None:
        a = raw["answers"]
        answers = AnnotatorAnswers(int(a.get("yes", 0)), int(a.get("no", 0)),
                                   int(a.get("unsure", 0)))
    ambiguity = raw.get("ambiguity")
    if ambiguity is not None:
        ambiguity = float(ambiguity)
    if answers is not None and ambiguity is not None:
        # Keep stored scores consistent with the answer counts.
        from .ambiguity import ambiguity as compute_ambiguity
        ambiguity = compute_ambiguity(answers)
    return Instance(
        id=instance_id,
        bbox=bbox,
        identity=str(raw.get("identity", "pedestrian")),
        occlusion=TagLevel.from_string(raw.get("occlusion", "none")),
        truncation=TagLevel.from_string(raw.get("truncation", "none")),
        answers=answers,
        ambiguity=ambiguity,
        ignore=bool(raw.get("ignore", False)),
        raw_tags=tuple(raw.get("raw_tags", ())),
    )


def _load_native(path: Path) -> Dataset:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict) or "images" not in raw:
        raise ParseError(f"{path}: not a native dataset file (missing 'images')")

    images: list[ImageRecord] = []
    seen_ids: set[str] = set()
    try:
        for image_raw in raw["images"]:
            image_id = str(image_raw["image_id"])
            if image_id in seen_ids:
                raise ValidationError(f"{path}: duplicate image_id {image_id!r}")
            seen_ids.add(image_id)
            width = int(image_raw["width"])
            height = int(image_raw["height"])
            instances = [_instance_from_dict(inst, width, height)
                         for inst in image_raw.get("instances", [])]
            images.append(ImageRecord(
                image_id=image_id, width=width, height=height,
                instances=instances, image_path=image_raw.get("image_path"),
            ))
        provenance = raw.get("provenance", [])
        if not isinstance(provenance, list):
            raise ParseError(f"{path}: provenance must be a list")
        return Dataset(
            name=str(raw.get("name", path.stem)),
            images=images,
            provenance=list(provenance),
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        # Structurally wrong but syntactically valid JSON.
        raise ParseError(f"{path}: malformed dataset structure: {exc}") from None


def _ecp_image_from_dict(raw: dict[str, Any], image_id: str) -> ImageRecord:
    width = int(raw.get("imagewidth", raw.get("width", 0)))
    height = int(raw.get("imageheight", raw.get("height", 0)))
    if width <= 0 or height <= 0:
        raise ParseError(f"ECP record {image_id!r}: missing image dimensions")
    instances: list[Instance] = []
    for index, child in enumerate(raw.get("children", [])):
        instance_id = str(child.get("id", f"{image_id}#{index}"))
        try:
            bbox = BoundingBox(float(child["x0"]), float(child["y0"]),
                               float(child["x1"]), float(child["y1"]))
        except KeyError as exc:
            raise ParseError(
                f"ECP record {image_id!r} child {index}: missing {exc}"
            ) from None
        except ValidationError as exc:
            raise ValidationError(f"instance {instance_id!r}: {exc}") from None
        bbox = _clamp_bbox(bbox, width, height, instance_id)
        occlusion = TagLevel.NONE
        truncation = TagLevel.NONE
        raw_tags: list[str] = []
        for tag in child.get("tags", []):
            mapped = ECP_TAG_MAP.get(tag)
            if mapped is None:
                raw_tags.append(tag)
            elif mapped[0] == "occlusion":
                occlusion = max(occlusion, mapped[1])
            else:
                truncation = max(truncation, mapped[1])
        if raw_tags:
            logger.warning("instance %s: %d unmapped tags kept verbatim",
                           instance_id, len(raw_tags))
        instances.append(Instance(
            id=instance_id, bbox=bbox,
            identity=str(child.get("identity", "pedestrian")),
            occlusion=occlusion, truncation=truncation,
            raw_tags=tuple(raw_tags),
        ))
    return ImageRecord(image_id=image_id, width=width, height=height,
                       instances=instances)


def _load_ecp(path: Path) -> Dataset:
    if path.is_dir():
        files = sorted(path.glob("*.json"))
        if not files:
            raise ParseError(f"{path}: no .json files to import")
        name = path.name
    else:
        files = [path]
        name = path.stem
    images: list[ImageRecord] = []
    seen_ids: set[str] = set()
    for file in files:
        try:
            with open(file, encoding="utf-8") as handle:
                raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{file}:{exc.lineno}: {exc.msg}") from None
        image_id = file.stem
        if image_id in seen_ids:
            raise ValidationError(f"duplicate image_id {image_id!r}")
        seen_ids.add(image_id)
        images.append(_ecp_image_from_dict(raw, image_id))
    return Dataset(name=name, images=images,
                   provenance=[{"op": "import", "format": "ecp", "source": str(path)}])


def load_dataset(path: str | Path, format: str = "native") -> Dataset:
    """Load a dataset from ``path`` in the native or ECP format."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"{path}: no such file or directory")
    if format == "native":
        return _load_native(path)
    if format == "ecp":
        return _load_ecp(path)
    raise ValidationError(f"unknown dataset format {format!r}")


def _instance_to_dict(instance: Instance) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "id": instance.id,
        "bbox": instance.bbox.as_list(),
        "identity": instance.identity,
        "occlusion": instance.occlusion.to_string(),
        "truncation": instance.truncation.to_string(),
        "ignore": instance.ignore,
    }
    if instance.answers is not None:
        payload["answers"] = {"yes": instance.answers.n_yes,
                              "no": instance.answers.n_no,
                              "unsure": instance.answers.n_unsure}
    if instance.ambiguity is not None:
        payload["ambiguity"] = instance.ambiguity
    if instance.raw_tags:
        payload["raw_tags"] = list(instance.raw_tags)
    return payload


def dataset_to_dict(dataset: Dataset) -> dict[str, Any]:
    images = []
    for image in dataset.images:
        image_payload: dict[str, Any] = {
            "image_id": image.image_id,
            "width": image.width,
            "height": image.height,
        }
        if image.image_path is not None:
            image_payload["image_path"] = image.image_path
        image_payload["instances"] = [_instance_to_dict(i) for i in image.instances]
        images.append(image_payload)
    return {"name": dataset.name, "images": images,
            "provenance": dataset.provenance}


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write ``dataset`` as native JSON; byte-deterministic for equal inputs."""
    path = Path(path)
    text = json.dumps(dataset_to_dict(dataset), indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8")


def load_detections(path: str | Path) -> list[Detection]:
    """Load detections from a JSON-lines file, preserving input order."""
    path = Path(path)
    detections: list[Detection] = []
    known_fields = {"image_id", "bbox", "confidence", "identity"}
    unknown_field_count = 0
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: {exc.msg}") from None
            unknown_field_count += sum(1 for k in raw if k not in known_fields)
            try:
                coords = raw["bbox"]
                bbox = BoundingBox(*[float(c) for c in coords])
                detection = Detection(
                    image_id=str(raw["image_id"]),
                    bbox=bbox,
                    confidence=float(raw["confidence"]),
                    identity=str(raw.get("identity", "pedestrian")),
                )
            except KeyError as exc:
                raise ParseError(f"{path}:{lineno}: missing field {exc}") from None
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
            except ValidationError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            detections.append(detection)
    if unknown_field_count:
        logger.warning("%s: ignored %d unknown detection fields",
                       path, unknown_field_count)
    return detections


def copy_dataset(dataset: Dataset) -> Dataset:
    """Shallow-copy the mutable containers; instances are immutable values."""
    return Dataset(
        name=dataset.name,
        images=[replace(image, instances=list(image.instances))
                for image in dataset.images],
        provenance=[dict(entry) for entry in dataset.provenance],
    )
