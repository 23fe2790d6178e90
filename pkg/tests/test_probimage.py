from __future__ import annotations

import numpy as np
import pytest

from acetex import (
    AceConfig,
    Frame,
    ProbImage,
    SourceField,
    backpropagate,
    compute_sources,
    layer_geometry,
    layer_image,
    pair_log_source,
    propagate,
    regularize,
    to_display,
    total_logprob,
    train_model,
)

from _synth import sawtooth_texture


def random_sources(rng: np.random.Generator, shape, levels: int):
    return [SourceField(l, rng.normal(size=shape)) for l in range(levels + 1)]


def geometries(levels: int):
    return [layer_geometry(l) for l in range(1, levels + 1)]


class TestComputeSources:
    def test_constant_image_worked_values(self):
        # 16x16 image of one value, 4 VQ bits, 2 histogram bits: the leaf
        # table holds 256 counts in one of 4 bins and the floor raises the
        # rest to 64, and each pair table holds 256 in one of 16 bins with
        # floor 16.  Both expected values follow by integer arithmetic.
        img = Frame(np.full((16, 16), 200), 8)
        model = train_model(img, AceConfig(layers=3, vq_bits=4, hist_bits=2, seed=1))
        sources = compute_sources(model, propagate(model, img))
        assert len(sources) == 4
        s0 = np.log(256.0 / (256 + 3 * 64))
        assert np.allclose(sources[0].values, s0, atol=1e-12)
        n_reg = 256 + 15 * 16
        row = 256 + 3 * 16
        s_pair = np.log(256.0 * n_reg / (row * row))
        for level in range(1, 4):
            assert np.allclose(sources[level].values, s_pair, atol=1e-12)

    def test_training_image_mean_source_is_table_average(self):
        # Scoring the training image visits each pair state exactly as often
        # as the raw table counted it, so the field's mean must equal the
        # count-weighted average of the regularized table's source values.
        img = Frame(sawtooth_texture(16, 16), 8)
        model = train_model(img, AceConfig(layers=2, vq_bits=4, hist_bits=3, seed=2))
        sources = compute_sources(model, propagate(model, img))
        raw = model.layers[0].hist
        reg = regularize(raw)
        a, b = np.mgrid[0:8, 0:8]
        table_avg = float((raw.counts * pair_log_source(reg, a, b)).sum()) / raw.total
        assert sources[1].values.mean() == pytest.approx(table_avg, abs=1e-12)

    def test_frame_count_mismatch_rejected(self):
        img = Frame(sawtooth_texture(16, 16), 8)
        model = train_model(img, AceConfig(layers=2, vq_bits=4, hist_bits=3, seed=3))
        frames = propagate(model, img)
        with pytest.raises(ValueError):
            compute_sources(model, frames[:-1])

    def test_frame_shape_mismatch_rejected(self):
        img = Frame(sawtooth_texture(16, 16), 8)
        model = train_model(img, AceConfig(layers=2, vq_bits=4, hist_bits=3, seed=4))
        frames = propagate(model, Frame(sawtooth_texture(32, 32), 8))
        with pytest.raises(ValueError):
            compute_sources(model, [frames[0], frames[1], propagate(model, img)[2]])


class TestTotalLogprob:
    def test_zero_sources(self):
        sources = [SourceField(l, np.zeros((8, 8))) for l in range(4)]
        assert total_logprob(sources) == 0.0

    def test_single_constant_pair_level(self):
        sources = [SourceField(0, np.zeros((8, 8))),
                   SourceField(1, np.full((8, 8), -3.0))]
        assert total_logprob(sources) == pytest.approx(-3.0 * 64 / 2, abs=1e-12)

    def test_halving_weights_oracle(self):
        rng = np.random.default_rng(5)
        sources = random_sources(rng, (8, 8), 4)
        want = sources[0].values.sum()
        for l in range(1, 5):
            want += sources[l].values.sum() / 2.0 ** l
        assert total_logprob(sources) == pytest.approx(want, rel=1e-12)

    def test_cooccurrence_rewrite(self):
        # Folding the leaf term into the first pair level: summing the leaf
        # field at both members of every level-1 pair counts each pixel
        # exactly twice under wrap, so half of (pairs + both leaf copies)
        # plus the higher levels is the same total.
        rng = np.random.default_rng(6)
        sources = random_sources(rng, (16, 16), 3)
        geoms = geometries(3)
        g1 = geoms[0]
        partner = np.roll(sources[0].values, -g1.offset, axis=g1.axis)
        cooc = 0.5 * (sources[1].values + sources[0].values + partner).sum()
        for l in range(2, 4):
            cooc += sources[l].values.sum() / 2.0 ** l
        assert total_logprob(sources) == pytest.approx(cooc, rel=1e-9)


class TestBackpropagate:
    def test_zero_sources_give_zero_image(self):
        sources = [SourceField(l, np.zeros((8, 8))) for l in range(3)]
        img = backpropagate(sources, geometries(2))
        assert not img.values.any()

    def test_constant_sources_closed_form(self):
        # Each level's constant spreads with weight 2^-l because every child
        # has exactly two parents and each step scales by a quarter.
        consts = [0.7, -1.1, 0.4, 2.5]
        sources = [SourceField(l, np.full((8, 8), consts[l])) for l in range(4)]
        img = backpropagate(sources, geometries(3))
        want = consts[0] + sum(consts[l] / 2.0 ** l for l in range(1, 4))
        assert np.allclose(img.values, want, atol=1e-12)

    def test_pixel_sum_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            sources = random_sources(rng, (16, 16), 4)
            img = backpropagate(sources, geometries(4))
            assert img.values.sum() == pytest.approx(total_logprob(sources), rel=1e-9)

    def test_provenance_lists_all_levels(self):
        rng = np.random.default_rng(8)
        sources = random_sources(rng, (8, 8), 2)
        assert backpropagate(sources, geometries(2)).provenance == (0, 1, 2)


class TestLayerImage:
    def test_level_zero_is_leaf_field(self):
        rng = np.random.default_rng(9)
        sources = random_sources(rng, (8, 8), 2)
        img = layer_image(sources, 0, geometries(2))
        assert np.array_equal(img.values, sources[0].values)
        assert img.provenance == (0,)

    def test_impulse_spreads_into_tile(self):
        # A single level-2 source reaches the 2x2 block anchored at its own
        # position, each pixel carrying a sixteenth of it.
        field = np.zeros((8, 8))
        field[3, 5] = 16.0
        sources = [SourceField(0, np.zeros((8, 8))), SourceField(1, np.zeros((8, 8))),
                   SourceField(2, field)]
        img = layer_image(sources, 2, geometries(2))
        want = np.zeros((8, 8))
        want[3, 5] = want[4, 5] = want[3, 6] = want[4, 6] = 1.0
        assert np.allclose(img.values, want, atol=1e-12)

    def test_wrapped_tile(self):
        field = np.zeros((4, 4))
        field[3, 3] = 16.0
        sources = [SourceField(0, np.zeros((4, 4))), SourceField(1, np.zeros((4, 4))),
                   SourceField(2, field)]
        img = layer_image(sources, 2, geometries(2))
        hot = {(3, 3), (0, 3), (3, 0), (0, 0)}
        for r in range(4):
            for c in range(4):
                assert img.values[r, c] == pytest.approx(
                    1.0 if (r, c) in hot else 0.0, abs=1e-12)

    def test_levels_sum_to_backpropagation(self):
        rng = np.random.default_rng(10)
        sources = random_sources(rng, (16, 16), 4)
        geoms = geometries(4)
        stacked = sum(layer_image(sources, l, geoms).values for l in range(5))
        assert np.allclose(stacked, backpropagate(sources, geoms).values, atol=1e-9)
        total = sum(layer_image(sources, l, geoms).values.sum() for l in range(5))
        assert total == pytest.approx(total_logprob(sources), rel=1e-9)

    def test_monotone_in_sources(self):
        rng = np.random.default_rng(11)
        sources = random_sources(rng, (8, 8), 3)
        geoms = geometries(3)
        base = backpropagate(sources, geoms)
        bumped = [SourceField(s.level, s.values.copy()) for s in sources]
        bumped[2].values[4, 4] += 1.0
        after = backpropagate(bumped, geoms)
        assert np.all(after.values >= base.values - 1e-12)
        assert total_logprob(bumped) > total_logprob(sources)


class TestToDisplay:
    def test_linear_map_example(self):
        img = ProbImage(np.array([[-2.0, 0.0, 2.0]]), (0,))
        assert np.array_equal(to_display(img).codes, [[0, 128, 255]])

    def test_invert_flips(self):
        img = ProbImage(np.array([[0.0, 1.0]]), (0,))
        assert np.array_equal(to_display(img, invert=True).codes, [[255, 0]])

    def test_constant_maps_to_midgrey(self):
        img = ProbImage(np.full((4, 4), -7.3), (0,))
        assert np.all(to_display(img).codes == 128)

    def test_order_preserved(self):
        rng = np.random.default_rng(12)
        values = rng.normal(size=(6, 6))
        shown = to_display(ProbImage(values, (0,))).codes
        order = np.argsort(values.ravel())
        assert np.all(np.diff(shown.ravel()[order]) >= 0)
        flipped = to_display(ProbImage(values, (0,)), invert=True).codes
        assert np.all(np.diff(flipped.ravel()[order]) <= 0)
