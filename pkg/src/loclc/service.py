"""HTTP compression service wrapping the codec.

Models are loaded once at startup and served to many clients; images and
streams travel base64-encoded inside JSON bodies.  Configure via
``create_app({name: LocalModel})`` or the ``LOCLC_MODELS`` environment
variable (comma-separated weight-file paths) when running
``uvicorn loclc.service:app``.
"""

import base64
import binascii
import os
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import codec, images
from .codec import CompressedStream, Scheme
from .errors import LoclcError
from .model import LocalModel


class HeaderInfo(BaseModel):
    version: int
    height: int
    width: int
    channels: int
    horizon: int
    model_hash: str
    payload_bytes: int


class ModelInfo(BaseModel):
    name: str
    hash: str
    horizon: int
    channels: int
    hidden: int
    resblocks: int
    mixtures: int


class CompressRequest(BaseModel):
    image_b64: str = Field(description="base64 PGM/PPM bytes, or raw bytes with extents")
    model: str
    width: Optional[int] = None
    height: Optional[int] = None
    channels: int = 1
    threads: int = 1


class CompressResponse(BaseModel):
    stream_b64: str
    bits: int
    bpd: float
    header: HeaderInfo


class DecompressRequest(BaseModel):
    stream_b64: str
    model: str
    scheme: Literal["sequential", "parallel", "sheared", "seq", "par", "shear"] = "sheared"
    threads: int = 1


class DecompressResponse(BaseModel):
    image_b64: str = Field(description="base64 PGM/PPM bytes")
    height: int
    width: int
    channels: int
    scheme: str


class VerifyRequest(BaseModel):
    image_b64: str
    model: str
    threads: int = 1


class VerifyResponse(BaseModel):
    schemes_total: int
    schemes_identical: int
    identical: bool
    bpd: float


class InfoRequest(BaseModel):
    stream_b64: str


def _b64decode(data, what):
    try:
        return base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError) as e:
        raise HTTPException(status_code=400, detail=f"bad base64 in {what}: {e}") from e


def _header_info(stream):
    return HeaderInfo(version=codec.STREAM_VERSION, height=stream.height,
                      width=stream.width, channels=stream.channels,
                      horizon=stream.horizon,
                      model_hash=f"{stream.model_hash:016x}",
                      payload_bytes=len(stream.payload))


def create_app(models):
    """Build the service around a {name: LocalModel} registry."""
    app = FastAPI(title="loclc", version="0.1.0",
                  description="local lossless image compression service")

    def get_model(name):
        try:
            return models[name]
        except KeyError:
            raise HTTPException(status_code=404,
                                detail=f"unknown model {name!r}") from None

    def parse_image(req):
        data = _b64decode(req.image_b64, "image_b64")
        try:
            if getattr(req, "width", None):
                return images.decode_raw(data, req.width, req.height, req.channels)
            return images.decode_pnm(data)
        except LoclcError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "models": sorted(models)}

    @app.get("/models", response_model=list[ModelInfo])
    def list_models():
        return [ModelInfo(name=name, hash=f"{m.hash:016x}", horizon=m.h,
                          channels=m.channels, hidden=m.config.hidden,
                          resblocks=m.config.n_resblocks,
                          mixtures=m.config.n_mixtures)
                for name, m in sorted(models.items())]

    @app.post("/compress", response_model=CompressResponse)
    def compress(req: CompressRequest):
        model = get_model(req.model)
        image = parse_image(req)
        try:
            stream = codec.encode(image, model, threads=max(1, req.threads))
        except LoclcError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return CompressResponse(
            stream_b64=base64.b64encode(stream.serialize()).decode(),
            bits=stream.bits, bpd=stream.bpd, header=_header_info(stream))

    @app.post("/decompress", response_model=DecompressResponse)
    def decompress(req: DecompressRequest):
        model = get_model(req.model)
        data = _b64decode(req.stream_b64, "stream_b64")
        try:
            stream = CompressedStream.parse(data)
            scheme = Scheme.parse(req.scheme)
            image = codec.decode(stream, model, scheme, threads=max(1, req.threads))
        except LoclcError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return DecompressResponse(
            image_b64=base64.b64encode(images.encode_pnm(image)).decode(),
            height=image.shape[0], width=image.shape[1], channels=image.shape[2],
            scheme=scheme.value)

    @app.post("/verify", response_model=VerifyResponse)
    def verify(req: VerifyRequest):
        model = get_model(req.model)
        image = parse_image(req)
        try:
            stream = codec.encode(image, model, threads=max(1, req.threads))
            ok = sum(bool(np.array_equal(codec.decode(stream, model, s), image))
                     for s in Scheme)
        except LoclcError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e
        return VerifyResponse(schemes_total=3, schemes_identical=ok,
                              identical=ok == 3, bpd=stream.bpd)

    @app.post("/info", response_model=HeaderInfo)
    def info(req: InfoRequest):
        data = _b64decode(req.stream_b64, "stream_b64")
        try:
            return _header_info(CompressedStream.parse(data))
        except LoclcError as e:
            raise HTTPException(status_code=400, detail=str(e)) from e

    return app


def _models_from_env():
    paths = [p for p in os.environ.get("LOCLC_MODELS", "").split(",") if p]
    return {os.path.splitext(os.path.basename(p))[0]: LocalModel.load(p)
            for p in paths}


app = create_app(_models_from_env())
