import csv
import io
import json

import numpy as np
import pytest

from conftest import make_model
from loclc.cli import main
from loclc.images import read_image, write_image


@pytest.fixture
def workspace(tmp_path):
    model = make_model(h=1, channels=1, seed=0)
    model_path = tmp_path / "model.nlwt"
    model.save(model_path)
    img = np.random.default_rng(1).integers(0, 256, (6, 8, 1), dtype=np.uint8)
    img_path = tmp_path / "img.pgm"
    write_image(img_path, img)
    return tmp_path, model_path, img_path, img


class TestCompressDecompress:
    def test_roundtrip(self, workspace, capsys):
        tmp, model_path, img_path, img = workspace
        out = tmp / "img.nllc"
        back = tmp / "back.pgm"
        assert main(["compress", str(img_path), str(out), "--model",
                     str(model_path)]) == 0
        assert main(["decompress", str(out), str(back), "--model",
                     str(model_path)]) == 0
        assert np.array_equal(read_image(back), img)
        assert "bpd" in capsys.readouterr().out

    @pytest.mark.parametrize("scheme", ["seq", "par", "shear", "sequential"])
    def test_schemes(self, workspace, scheme):
        tmp, model_path, img_path, img = workspace
        out = tmp / "img.nllc"
        back = tmp / f"{scheme}.pgm"
        main(["compress", str(img_path), str(out), "--model", str(model_path)])
        assert main(["decompress", str(out), str(back), "--model",
                     str(model_path), "--scheme", scheme]) == 0
        assert np.array_equal(read_image(back), img)

    def test_raw_input(self, workspace):
        tmp, model_path, _, img = workspace
        raw = tmp / "img.raw"
        raw.write_bytes(img.tobytes())
        out = tmp / "raw.nllc"
        assert main(["compress", str(raw), str(out), "--model", str(model_path),
                     "--width", "8", "--height", "6"]) == 0
        back = tmp / "back.raw"
        assert main(["decompress", str(out), str(back), "--model",
                     str(model_path)]) == 0
        assert back.read_bytes() == img.tobytes()

    def test_wrong_model_exits_one(self, workspace, tmp_path, capsys):
        tmp, model_path, img_path, _ = workspace
        other = make_model(seed=77)
        other_path = tmp_path / "other.nlwt"
        other.save(other_path)
        out = tmp / "img.nllc"
        main(["compress", str(img_path), str(out), "--model", str(model_path)])
        assert main(["decompress", str(out), str(tmp / "x.pgm"), "--model",
                     str(other_path)]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_file_exits_one(self, workspace):
        tmp, model_path, _, _ = workspace
        assert main(["compress", str(tmp / "nope.pgm"), str(tmp / "o"),
                     "--model", str(model_path)]) == 1


class TestVerify:
    def test_reports_three_of_three(self, workspace, capsys):
        _, model_path, img_path, _ = workspace
        assert main(["verify", "--model", str(model_path), "--image",
                     str(img_path)]) == 0
        assert "3/3 schemes identical" in capsys.readouterr().out


class TestBench:
    def test_csv_rows_and_equal_bpd(self, workspace, capsys):
        _, model_path, img_path, _ = workspace
        assert main(["bench", "--model", str(model_path), "--image",
                     str(img_path), "--schemes", "seq,par,shear",
                     "--repeats", "2", "--format", "csv"]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert len(rows) == 3
        assert [r["scheme"] for r in rows] == ["sequential", "parallel", "sheared"]
        assert len({r["bpd"] for r in rows}) == 1
        assert float(rows[0]["speedup"]) == 1.0

    def test_json_schema_stable(self, workspace, capsys):
        _, model_path, img_path, _ = workspace
        main(["bench", "--model", str(model_path), "--image", str(img_path),
              "--schemes", "par", "--repeats", "1", "--format", "json"])
        rec = json.loads(capsys.readouterr().out)[0]
        assert list(rec) == ["image", "scheme", "wall_seconds", "rounds",
                             "bits", "bpd", "speedup"]

    def test_table(self, workspace, capsys):
        _, model_path, img_path, _ = workspace
        assert main(["bench", "--model", str(model_path), "--image",
                     str(img_path), "--schemes", "shear", "--repeats", "1"]) == 0
        assert "sheared" in capsys.readouterr().out


class TestInfo:
    def test_stream_header(self, workspace, capsys):
        tmp, model_path, img_path, _ = workspace
        out = tmp / "img.nllc"
        main(["compress", str(img_path), str(out), "--model", str(model_path)])
        assert main(["info", str(out)]) == 0
        text = capsys.readouterr().out
        assert "6x8x1" in text and "horizon: 1" in text and "payload" in text

    def test_weight_header(self, workspace, capsys):
        _, model_path, _, _ = workspace
        assert main(["info", str(model_path)]) == 0
        assert "h=1" in capsys.readouterr().out

    def test_garbage_exits_one(self, tmp_path):
        bad = tmp_path / "x.bin"
        bad.write_bytes(b"garbage here")
        assert main(["info", str(bad)]) == 1


class TestUsage:
    def test_no_command_exits_two(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 2

    def test_unknown_flag_exits_two(self, workspace):
        _, model_path, img_path, _ = workspace
        with pytest.raises(SystemExit) as e:
            main(["verify", "--model", str(model_path), "--image",
                  str(img_path), "--bogus"])
        assert e.value.code == 2

    def test_env_threads_fallback(self, workspace, monkeypatch):
        _, model_path, img_path, _ = workspace
        monkeypatch.setenv("LOCLC_THREADS", "2")
        assert main(["verify", "--model", str(model_path), "--image",
                     str(img_path)]) == 0
