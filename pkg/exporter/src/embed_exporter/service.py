"""HTTP embedding service implementing the engine's provider contract.

POST /embed  {"kind": "text" | "image", "input": <text or base64 image>}
          -> {"dim": n, "values": [...]}            (vector unit-normalized)
GET /healthz -> 200 {"status": "ok", "model": ..., "dim": n}

Schema violations answer 4xx; model failures answer 5xx.
"""

from __future__ import annotations

import base64
import binascii
import io
from typing import Literal

from fastapi import FastAPI, HTTPException
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel

from . import eef1
from .models import TextImageModel


class EmbedRequest(BaseModel):
    kind: Literal["text", "image"]
    input: str


class EmbedResponse(BaseModel):
    dim: int
    values: list[float]


def create_app(model: TextImageModel) -> FastAPI:
    app = FastAPI(title="embed-exporter", version="0.1.0")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model": model.model_id, "dim": model.dim}

    @app.post("/embed", response_model=EmbedResponse)
    def embed(request: EmbedRequest):
        if request.kind == "text":
            try:
                vectors = model.embed_texts([request.input])
            except Exception as exc:
                raise HTTPException(status_code=500, detail=str(exc)) from exc
        else:
            try:
                raw = base64.b64decode(request.input, validate=True)
                image = Image.open(io.BytesIO(raw)).convert("RGB")
            except (binascii.Error, UnidentifiedImageError, OSError) as exc:
                raise HTTPException(
                    status_code=400, detail=f"input is not a base64 image: {exc}"
                ) from exc
            try:
                vectors = model.embed_images([image])
            except Exception as exc:
                raise HTTPException(status_code=500, detail=str(exc)) from exc
        values = eef1.normalize_rows(vectors)[0]
        return EmbedResponse(dim=model.dim, values=[float(x) for x in values])

    return app


def serve(model: TextImageModel, host: str = "127.0.0.1", port: int = 8090):
    import uvicorn

    uvicorn.run(create_app(model), host=host, port=port, log_level="warning")
