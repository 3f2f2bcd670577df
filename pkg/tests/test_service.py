import base64

import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import make_model
from loclc.images import decode_pnm, encode_pnm
from loclc.service import create_app


@pytest.fixture(scope="module")
def client():
    models = {"gray": make_model(h=1, channels=1, seed=0),
              "rgb": make_model(h=1, channels=3, seed=1)}
    return TestClient(create_app(models))


def b64(data):
    return base64.b64encode(data).decode()


@pytest.fixture(scope="module")
def gray_image():
    return np.random.default_rng(2).integers(0, 256, (6, 7, 1), dtype=np.uint8)


class TestMeta:
    def test_healthz(self, client):
        body = client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["models"] == ["gray", "rgb"]

    def test_models_listing(self, client):
        body = client.get("/models").json()
        assert [m["name"] for m in body] == ["gray", "rgb"]
        assert body[0]["horizon"] == 1
        assert len(body[0]["hash"]) == 16


class TestCompressDecompress:
    def test_roundtrip(self, client, gray_image):
        r = client.post("/compress", json={
            "image_b64": b64(encode_pnm(gray_image)), "model": "gray"})
        assert r.status_code == 200
        body = r.json()
        assert body["bits"] == body["header"]["payload_bytes"] * 8
        assert body["header"]["height"] == 6

        for scheme in ("sequential", "par", "sheared"):
            d = client.post("/decompress", json={
                "stream_b64": body["stream_b64"], "model": "gray",
                "scheme": scheme})
            assert d.status_code == 200
            img = decode_pnm(base64.b64decode(d.json()["image_b64"]))
            assert np.array_equal(img, gray_image)

    def test_raw_image_with_extents(self, client, gray_image):
        r = client.post("/compress", json={
            "image_b64": b64(gray_image.tobytes()), "model": "gray",
            "width": 7, "height": 6, "channels": 1})
        assert r.status_code == 200

    def test_rgb_model(self, client):
        img = np.random.default_rng(3).integers(0, 256, (4, 5, 3), dtype=np.uint8)
        r = client.post("/compress", json={
            "image_b64": b64(encode_pnm(img)), "model": "rgb"})
        d = client.post("/decompress", json={
            "stream_b64": r.json()["stream_b64"], "model": "rgb"})
        assert np.array_equal(
            decode_pnm(base64.b64decode(d.json()["image_b64"])), img)


class TestVerifyInfo:
    def test_verify(self, client, gray_image):
        r = client.post("/verify", json={
            "image_b64": b64(encode_pnm(gray_image)), "model": "gray"})
        body = r.json()
        assert body["identical"] is True
        assert body["schemes_identical"] == 3

    def test_info(self, client, gray_image):
        r = client.post("/compress", json={
            "image_b64": b64(encode_pnm(gray_image)), "model": "gray"})
        i = client.post("/info", json={"stream_b64": r.json()["stream_b64"]})
        assert i.json()["width"] == 7
        assert i.json()["horizon"] == 1


class TestErrors:
    def test_unknown_model_404(self, client, gray_image):
        r = client.post("/compress", json={
            "image_b64": b64(encode_pnm(gray_image)), "model": "nope"})
        assert r.status_code == 404

    def test_bad_base64_400(self, client):
        r = client.post("/compress", json={"image_b64": "!!!", "model": "gray"})
        assert r.status_code == 400

    def test_bad_image_400(self, client):
        r = client.post("/compress", json={"image_b64": b64(b"not a pnm"),
                                           "model": "gray"})
        assert r.status_code == 400

    def test_corrupt_stream_400(self, client):
        r = client.post("/decompress", json={"stream_b64": b64(b"NLLCgarbage"),
                                             "model": "gray"})
        assert r.status_code == 400

    def test_wrong_model_for_stream_400(self, client, gray_image):
        r = client.post("/compress", json={
            "image_b64": b64(encode_pnm(gray_image)), "model": "gray"})
        d = client.post("/decompress", json={
            "stream_b64": r.json()["stream_b64"], "model": "rgb"})
        assert d.status_code == 400
