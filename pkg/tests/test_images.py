import numpy as np
import pytest

from loclc.errors import ImageFormatError
from loclc.images import (decode_pnm, decode_raw, encode_pnm, read_image,
                          write_image)


class TestPnm:
    def test_pgm_roundtrip(self):
        img = np.random.default_rng(0).integers(0, 256, (7, 5, 1), dtype=np.uint8)
        assert np.array_equal(decode_pnm(encode_pnm(img)), img)

    def test_ppm_roundtrip(self):
        img = np.random.default_rng(1).integers(0, 256, (4, 6, 3), dtype=np.uint8)
        blob = encode_pnm(img)
        assert blob[:2] == b"P6"
        assert np.array_equal(decode_pnm(blob), img)

    def test_comments_and_whitespace(self):
        raster = bytes(range(6))
        blob = b"P5 # format\n# a comment line\n 3\n# another\n2 255\n" + raster
        img = decode_pnm(blob)
        assert img.shape == (2, 3, 1)
        assert img.ravel().tolist() == list(range(6))

    def test_sixteen_bit_rejected(self):
        with pytest.raises(ImageFormatError):
            decode_pnm(b"P5\n2 2\n65535\n" + bytes(8))

    def test_truncated_raster(self):
        with pytest.raises(ImageFormatError):
            decode_pnm(b"P5\n4 4\n255\n" + bytes(3))

    def test_not_pnm(self):
        with pytest.raises(ImageFormatError):
            decode_pnm(b"GIF89a....")

    def test_maxval_below_255_accepted(self):
        blob = b"P5\n2 1\n15\n" + bytes([3, 15])
        assert decode_pnm(blob).ravel().tolist() == [3, 15]


class TestRaw:
    def test_roundtrip(self):
        img = np.random.default_rng(2).integers(0, 256, (3, 4, 3), dtype=np.uint8)
        assert np.array_equal(decode_raw(img.tobytes(), 4, 3, 3), img)

    def test_size_mismatch(self):
        with pytest.raises(ImageFormatError):
            decode_raw(bytes(10), 4, 3, 1)


class TestFiles:
    def test_pnm_file(self, tmp_path):
        img = np.random.default_rng(3).integers(0, 256, (5, 5, 3), dtype=np.uint8)
        path = tmp_path / "x.ppm"
        write_image(path, img)
        assert np.array_equal(read_image(path), img)

    def test_raw_file_needs_extents(self, tmp_path):
        path = tmp_path / "x.raw"
        img = np.random.default_rng(4).integers(0, 256, (2, 3, 1), dtype=np.uint8)
        write_image(path, img)
        with pytest.raises(ImageFormatError):
            read_image(path)
        assert np.array_equal(read_image(path, width=3, height=2), img)
