from __future__ import annotations

import numpy as np
import pytest

from acetex import (
    AceConfig,
    Frame,
    ModelFormatError,
    PgmParseError,
    compute_sources,
    load_model,
    propagate,
    read_pgm,
    save_model,
    total_logprob,
    train_model,
    write_pgm,
)

from _synth import sawtooth_texture


class TestPgm:
    def test_one_pixel_file(self):
        assert write_pgm(Frame(np.array([[7]]), 8)) == b"P5\n1 1\n255\n\x07"

    def test_roundtrip_random_image(self):
        rng = np.random.default_rng(0)
        codes = rng.integers(0, 256, size=(16, 16))
        back = read_pgm(write_pgm(Frame(codes, 8)))
        assert np.array_equal(back.codes, codes)
        assert back.bits == 8

    def test_ascii_variant(self):
        data = b"P2\n3 2\n255\n0 10 20\n30 40 255\n"
        frame = read_pgm(data)
        assert np.array_equal(frame.codes, [[0, 10, 20], [30, 40, 255]])

    def test_comments_skipped(self):
        data = b"P5\n# a comment\n2 1\n# another\n255\n\x01\x02"
        assert np.array_equal(read_pgm(data).codes, [[1, 2]])

    def test_unsupported_maxval(self):
        with pytest.raises(PgmParseError, match="maxval"):
            read_pgm(b"P5\n2 2\n65535\n" + bytes(8))

    def test_bad_magic(self):
        with pytest.raises(PgmParseError, match="magic"):
            read_pgm(b"P6\n1 1\n255\n\x00")

    def test_truncated_pixels_report_offset(self):
        with pytest.raises(PgmParseError) as err:
            read_pgm(b"P5\n2 2\n255\n\x01\x02")
        assert "3 bytes" in str(err.value) or "pixel" in str(err.value)
        assert err.value.offset is not None

    def test_ascii_value_above_maxval(self):
        with pytest.raises(PgmParseError):
            read_pgm(b"P2\n1 1\n255\n300\n")

    def test_wide_codes_rejected_on_write(self):
        with pytest.raises(ValueError):
            write_pgm(Frame(np.array([[300]]), 16))


def toy_model(layers: int = 1):
    img = Frame(sawtooth_texture(8, 8), 8)
    cfg = AceConfig(layers=layers, vq_bits=3, hist_bits=2, seed=3)
    return img, train_model(img, cfg)


class TestModelFile:
    def test_save_load_save_is_stable(self):
        _, model = toy_model(2)
        blob = save_model(model)
        again = save_model(load_model(blob))
        assert blob == again

    def test_loaded_model_scores_identically(self):
        img, model = toy_model(1)
        before = total_logprob(compute_sources(model, propagate(model, img)))
        loaded = load_model(save_model(model))
        after = total_logprob(compute_sources(loaded, propagate(loaded, img)))
        assert after == before

    def test_header_contents(self):
        _, model = toy_model(1)
        lines = save_model(model).decode("ascii").splitlines()
        assert lines[0] == "ACE-MODEL v1"
        assert lines[1].startswith("width 8 height 8 layers 1 vq_bits 3 hist_bits 2")
        assert lines[-1] == "END"

    def test_missing_end_is_truncation(self):
        _, model = toy_model(1)
        blob = save_model(model)
        clipped = blob[:blob.rindex(b"END")]
        with pytest.raises(ModelFormatError, match="truncated"):
            load_model(clipped)

    def test_version_mismatch(self):
        _, model = toy_model(1)
        blob = save_model(model).replace(b"ACE-MODEL v1", b"ACE-MODEL v9")
        with pytest.raises(ModelFormatError, match="version"):
            load_model(blob)

    def test_wrong_magic(self):
        with pytest.raises(ModelFormatError, match="magic"):
            load_model(b"SOMETHING v1\n")

    def test_trailing_data_rejected(self):
        _, model = toy_model(1)
        with pytest.raises(ModelFormatError, match="trailing"):
            load_model(save_model(model) + b"extra")

    def test_inconsistent_direction_rejected(self):
        _, model = toy_model(2)
        blob = save_model(model)
        # Layer 2 must alternate away from layer 1's direction.
        broken = blob.replace(b"LAYER 2 DIR h", b"LAYER 2 DIR v")
        assert broken != blob
        with pytest.raises(ModelFormatError, match="geometry"):
            load_model(broken)

    def test_codebook_size_must_match_bits(self):
        _, model = toy_model(1)
        blob = save_model(model)
        broken = blob.replace(b"CODEBOOK 8", b"CODEBOOK 7", 1)
        with pytest.raises(ModelFormatError):
            load_model(broken)

    def test_negative_count_rejected(self):
        _, model = toy_model(1)
        text = save_model(model).decode("ascii")
        head, _, rest = text.partition("LEAF_HIST\n")
        first, _, tail = rest.partition("\n")
        swapped = head + "LEAF_HIST\n-1" + first[first.index(" "):] + "\n" + tail
        with pytest.raises(ModelFormatError, match="negative"):
            load_model(swapped.encode("ascii"))

    def test_non_ascii_rejected(self):
        with pytest.raises(ModelFormatError, match="ASCII"):
            load_model(b"ACE-MODEL v1\n\xff\xfe")
