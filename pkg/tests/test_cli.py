from __future__ import annotations

import numpy as np
import pytest

from acetex import Frame, read_pgm, write_pgm
from acetex.cli import main

from _synth import add_salt, permute_patch, sawtooth_texture


def write_image(path, codes):
    path.write_bytes(write_pgm(Frame(codes, 8)))


@pytest.fixture()
def trained(tmp_path, capsys):
    img_path = tmp_path / "texture.pgm"
    model_path = tmp_path / "model.txt"
    write_image(img_path, sawtooth_texture(32, 32))
    code = main(["train", "--input", str(img_path), "--output", str(model_path),
                 "--layers", "4", "--vq-bits", "4", "--hist-bits", "3",
                 "--seed", "7"])
    assert code == 0
    return img_path, model_path, capsys.readouterr().out


class TestUsageErrors:
    def test_missing_required_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["train", "--output", "x.txt"])
        assert err.value.code == 2

    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["frobnicate"])
        assert err.value.code == 2

    def test_no_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main([])
        assert err.value.code == 2


class TestTrain:
    def test_prints_layer_summaries_and_writes_model(self, trained, tmp_path):
        _, _, out = trained
        assert "layer 1 dir v offset 1 field 1x2" in out
        assert "train_seconds" in out
        assert (tmp_path / "model.txt").exists()

    def test_deterministic_model_files(self, tmp_path):
        img_path = tmp_path / "t.pgm"
        write_image(img_path, sawtooth_texture(16, 16))
        for name in ("a.txt", "b.txt"):
            assert main(["train", "--input", str(img_path),
                         "--output", str(tmp_path / name),
                         "--layers", "3", "--vq-bits", "4", "--hist-bits", "3",
                         "--seed", "5"]) == 0
        assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()

    def test_missing_input_file_exits_one(self, tmp_path, capsys):
        code = main(["train", "--input", str(tmp_path / "nope.pgm"),
                     "--output", str(tmp_path / "m.txt")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_too_small_image_exits_one(self, tmp_path, capsys):
        img_path = tmp_path / "small.pgm"
        write_image(img_path, sawtooth_texture(4, 4))
        code = main(["train", "--input", str(img_path),
                     "--output", str(tmp_path / "m.txt"), "--layers", "8"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestScore:
    def test_writes_layer_images_and_totals(self, trained, tmp_path, capsys):
        img_path, model_path, _ = trained
        out_dir = tmp_path / "scores"
        code = main(["score", "--model", str(model_path), "--input", str(img_path),
                     "--out-dir", str(out_dir), "--combined"])
        assert code == 0
        out = capsys.readouterr().out
        assert "total_logprob " in out
        assert "per_pixel_logprob " in out
        files = sorted(p.name for p in out_dir.iterdir())
        assert files == ["combined.pgm", "layer_00.pgm", "layer_01.pgm",
                         "layer_02.pgm", "layer_03.pgm", "layer_04.pgm"]
        for p in out_dir.iterdir():
            frame = read_pgm(p.read_bytes())
            assert frame.codes.shape == (32, 32)

    def test_deterministic_outputs(self, trained, tmp_path):
        img_path, model_path, _ = trained
        blobs = []
        for name in ("s1", "s2"):
            out_dir = tmp_path / name
            assert main(["score", "--model", str(model_path),
                         "--input", str(img_path), "--out-dir", str(out_dir)]) == 0
            blobs.append({p.name: p.read_bytes() for p in out_dir.iterdir()})
        assert blobs[0] == blobs[1]

    def test_training_image_outscores_permuted_copy(self, trained, tmp_path, capsys):
        img_path, model_path, _ = trained
        base = read_pgm(img_path.read_bytes()).codes
        rng = np.random.default_rng(0)
        patched = permute_patch(add_salt(base, 0.05, rng), 12, 12, 8, rng)
        bad_path = tmp_path / "bad.pgm"
        write_image(bad_path, patched)

        def score_of(path, out_name):
            assert main(["score", "--model", str(model_path), "--input", str(path),
                         "--out-dir", str(tmp_path / out_name)]) == 0
            out = capsys.readouterr().out
            line = [l for l in out.splitlines() if l.startswith("total_logprob")][0]
            return float(line.split()[1])

        assert score_of(img_path, "good_out") > score_of(bad_path, "bad_out")

    def test_constant_trained_model_flat_display(self, tmp_path, capsys):
        img_path = tmp_path / "flat.pgm"
        write_image(img_path, np.full((16, 16), 99))
        model_path = tmp_path / "flat.txt"
        assert main(["train", "--input", str(img_path), "--output", str(model_path),
                     "--layers", "2", "--vq-bits", "4", "--hist-bits", "2"]) == 0
        out_dir = tmp_path / "flat_scores"
        assert main(["score", "--model", str(model_path), "--input", str(img_path),
                     "--out-dir", str(out_dir)]) == 0
        for p in out_dir.iterdir():
            assert np.all(read_pgm(p.read_bytes()).codes == 128)

    def test_undersized_input_exits_one(self, trained, tmp_path, capsys):
        _, model_path, _ = trained
        tiny = tmp_path / "tiny.pgm"
        write_image(tiny, sawtooth_texture(2, 2))
        code = main(["score", "--model", str(model_path), "--input", str(tiny),
                     "--out-dir", str(tmp_path / "x")])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestInfo:
    def test_reports_config_and_occupancy(self, trained, capsys):
        _, model_path, _ = trained
        capsys.readouterr()
        assert main(["info", "--model", str(model_path)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("width 32 height 32 layers 4 vq_bits 4 hist_bits 3")
        assert "leaf_hist occupancy" in out
        assert "layer 4 dir h offset 2 field 4x4" in out

    def test_constant_model_single_bin_occupancy(self, tmp_path, capsys):
        img_path = tmp_path / "flat.pgm"
        write_image(img_path, np.full((16, 16), 40))
        model_path = tmp_path / "m.txt"
        assert main(["train", "--input", str(img_path), "--output", str(model_path),
                     "--layers", "1", "--vq-bits", "4", "--hist-bits", "2"]) == 0
        capsys.readouterr()
        assert main(["info", "--model", str(model_path)]) == 0
        out = capsys.readouterr().out
        assert f"occupancy {1 / 16:.6g}" in out

    def test_corrupt_model_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_bytes(b"not a model\n")
        assert main(["info", "--model", str(bad)]) == 1
        assert "error:" in capsys.readouterr().err


class TestReport:
    def test_writes_figures_and_csv(self, trained, tmp_path, capsys):
        img_path, model_path, _ = trained
        out_dir = tmp_path / "report"
        code = main(["report", "--model", str(model_path), "--input", str(img_path),
                     "--out-dir", str(out_dir)])
        assert code == 0
        assert (out_dir / "layers.png").exists()
        assert (out_dir / "contributions.png").exists()
        csv_lines = (out_dir / "layer_summary.csv").read_text().splitlines()
        assert csv_lines[0].startswith("layer,")
        assert len(csv_lines) == 6
        assert "total_logprob " in capsys.readouterr().out
