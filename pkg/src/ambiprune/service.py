"""Read-only HTTP API over a loaded scored dataset.

Serves dataset summaries, ambiguity histograms, instance listings, crops,
and interactive what-if evaluations for the threshold-explorer UI.  The
dataset snapshot is immutable after load; the only shared mutable state is
a small LRU cache of evaluation results.
"""

from __future__ import annotations

import io
import threading
from collections import OrderedDict
from typing import Any

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel

from .ambiguity import histogram, score_summary
from .errors import AmbiPruneError
from .evaluation import (
    BUILTIN_SUBSETS,
    DEFAULT_CONFIDENCE_THRESHOLD,
    DEFAULT_IOU_THRESHOLD,
    evaluate,
)
from .model import Dataset, Detection, Instance
from .pruning import prune

CACHE_SIZE = 64
CROP_PADDING = 0.2


class WhatIfRequest(BaseModel):
    threshold: float
    subset: str = "all"
    iou: float = DEFAULT_IOU_THRESHOLD
    conf: float = DEFAULT_CONFIDENCE_THRESHOLD


class SessionState:
    """Immutable dataset snapshot plus a bounded result cache."""

    def __init__(self, dataset: Dataset,
                 detections: list[Detection] | None = None):
        self.dataset = dataset
        self.detections = detections
        self.sorted_instances: list[tuple[str, Instance]] = sorted(
            ((image.image_id, instance)
             for image, instance in dataset.iter_instances()
             if instance.ambiguity is not None),
            key=lambda pair: (-pair[1].ambiguity, pair[1].id),
        )
        self._cache: OrderedDict[tuple, dict[str, Any]] = OrderedDict()
        self._lock = threading.Lock()

    def whatif(self, request: WhatIfRequest) -> tuple[dict[str, Any], bool]:
        """Evaluation payload for one parameter tuple, plus cache-hit flag."""
        key = (request.threshold, request.subset, request.iou, request.conf)
        with self._lock:
            if key in self._cache:
                self._cache.move_to_end(key)
                return self._cache[key], True
        pruned, _ = prune(self.dataset, request.threshold, mode="ignore")
        result = evaluate(pruned, self.detections, subset=request.subset,
                          iou_threshold=request.iou,
                          confidence_threshold=request.conf).to_dict()
        with self._lock:
            self._cache[key] = result
            self._cache.move_to_end(key)
            while len(self._cache) > CACHE_SIZE:
                self._cache.popitem(last=False)
        return result, False


def _instance_payload(image_id: str, instance: Instance,
                      has_image: bool) -> dict[str, Any]:
    payload = {
        "instance_id": instance.id,
        "image_id": image_id,
        "bbox": instance.bbox.as_list(),
        "identity": instance.identity,
        "occlusion": instance.occlusion.to_string(),
        "truncation": instance.truncation.to_string(),
        "ambiguity": instance.ambiguity,
        "ignore": instance.ignore,
    }
    if has_image:
        payload["crop_url"] = f"/crops/{instance.id}"
    return payload


def create_app(dataset: Dataset | None = None,
               detections: list[Detection] | None = None,
               cors_origin: str | None = None) -> FastAPI:
    app = FastAPI(title="ambiprune")
    state = SessionState(dataset, detections) if dataset is not None else None

    if cors_origin:
        from fastapi.middleware.cors import CORSMiddleware
        app.add_middleware(CORSMiddleware, allow_origins=[cors_origin],
                           allow_methods=["*"], allow_headers=["*"])

    def require_state() -> SessionState:
        if state is None:
            raise HTTPException(status_code=503, detail="no dataset loaded")
        return state

    @app.get("/healthz")
    def healthz() -> Response:
        return Response(content="ok", media_type="text/plain")

    @app.get("/dataset/summary")
    def dataset_summary() -> dict[str, Any]:
        session = require_state()
        data = session.dataset
        summary = score_summary(data)
        return {
            "name": data.name,
            "images": len(data.images),
            "instances": data.instance_count(),
            "scored": summary["scored"],
            "ambiguity_mean": summary["mean"],
            "ambiguity_quantiles": summary["quantiles"],
            "provenance": data.provenance,
        }

    @app.get("/ambiguity/histogram")
    def ambiguity_histogram(bins: int = 20) -> dict[str, Any]:
        session = require_state()
        if not 1 <= bins <= 200:
            raise HTTPException(status_code=400,
                                detail=f"bins must be in [1, 200], got {bins}")
        try:
            return histogram(session.dataset, bins).to_dict()
        except AmbiPruneError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None

    @app.get("/instances")
    def list_instances(min_amb: float = 0.0, max_amb: float = 1.0,
                       page: int = 1, page_size: int = 50) -> dict[str, Any]:
        session = require_state()
        if not (0.0 <= min_amb <= max_amb <= 1.0):
            raise HTTPException(
                status_code=400,
                detail=f"need 0 <= min_amb <= max_amb <= 1, "
                       f"got [{min_amb}, {max_amb}]")
        if page < 1 or page_size < 1:
            raise HTTPException(status_code=400, detail="bad pagination")
        selected = [(image_id, instance)
                    for image_id, instance in session.sorted_instances
                    if min_amb <= instance.ambiguity <= max_amb]
        start = (page - 1) * page_size
        if start >= len(selected) and page > 1:
            raise HTTPException(status_code=404, detail="page beyond end")
        image_paths = {image.image_id: image.image_path
                       for image in session.dataset.images}
        return {
            "total": len(selected),
            "page": page,
            "page_size": page_size,
            "instances": [
                _instance_payload(image_id, instance,
                                  image_paths.get(image_id) is not None)
                for image_id, instance in selected[start:start + page_size]
            ],
        }

    @app.post("/whatif")
    def whatif(request: WhatIfRequest, response: Response) -> dict[str, Any]:
        session = require_state()
        if session.detections is None:
            raise HTTPException(status_code=409, detail="no detections loaded")
        if not 0.0 <= request.threshold <= 1.0:
            raise HTTPException(status_code=400,
                                detail="threshold outside [0, 1]")
        if request.subset not in BUILTIN_SUBSETS:
            raise HTTPException(status_code=400,
                                detail=f"unknown subset {request.subset!r}")
        try:
            payload, hit = session.whatif(request)
        except AmbiPruneError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from None
        response.headers["X-Cache"] = "hit" if hit else "miss"
        return payload

    @app.get("/crops/{instance_id}")
    def crop(instance_id: str) -> Response:
        session = require_state()
        found = session.dataset.find_instance(instance_id)
        if found is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown instance {instance_id!r}")
        image_record, instance = found
        if image_record.image_path is None:
            raise HTTPException(status_code=409, detail="no image source")
        from PIL import Image

        bbox = instance.bbox
        pad_x = bbox.width * CROP_PADDING
        pad_y = bbox.height * CROP_PADDING
        left = max(0, int(bbox.x0 - pad_x))
        top = max(0, int(bbox.y0 - pad_y))
        right = min(image_record.width, int(round(bbox.x1 + pad_x)))
        bottom = min(image_record.height, int(round(bbox.y1 + pad_y)))
        try:
            with Image.open(image_record.image_path) as source:
                cropped = source.crop((left, top, right, bottom))
                buffer = io.BytesIO()
                cropped.save(buffer, format="PNG")
        except FileNotFoundError:
            raise HTTPException(status_code=409,
                                detail="image file missing") from None
        return Response(content=buffer.getvalue(), media_type="image/png")

    return app
