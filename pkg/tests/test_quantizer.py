import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sfvq.datasets import generate
from sfvq.errors import ConfigError, DimensionError, InsufficientDataError
from sfvq.quantizer import (
    TrainConfig,
    assign_dithered,
    bits_of,
    codeword_distortion,
    dithered_codebook,
    expand,
    init_norm_sorted,
    init_random,
    quantize_nearest,
    quantize_segment,
    quantize_segment_batch,
    segment_distortion,
    sfvq_loss_grad,
    train,
    vq_loss_grad,
)


def brute_dithered(x, c, lam):
    """Loop-over-entries oracle for the closest dithered codeword."""
    best = None
    for k in range(len(c) - 1):
        entry = [(1 - lam[k]) * a + lam[k] * b for a, b in zip(c[k], c[k + 1])]
        d = sum((xi - ei) ** 2 for xi, ei in zip(x, entry))
        if best is None or d < best[0]:
            best = (d, k, entry)
    return best


def frozen_loss(x, c, lam, seg):
    """Loss with the segment of every sample held fixed."""
    total = 0.0
    for xi, j in zip(x, seg):
        xhat = (1 - lam[j]) * c[j] + lam[j] * c[j + 1]
        total += float(np.sum((xi - xhat) ** 2))
    return total / len(x)


def finite_difference_grad(x, c, lam, seg, h=1e-3):
    g = np.zeros_like(c)
    for idx in np.ndindex(*c.shape):
        cp = c.copy()
        cm = c.copy()
        cp[idx] += h
        cm[idx] -= h
        g[idx] = (frozen_loss(x, cp, lam, seg) - frozen_loss(x, cm, lam, seg)) / (2 * h)
    return g


class TestInit:
    def test_norm_sorted_one_per_group(self):
        data = [(1, 0), (2, 0), (3, 0), (4, 0)]
        np.testing.assert_array_equal(init_norm_sorted(data, 4), data)

    def test_norm_sorted_pairs(self):
        data = [(v, 0) for v in (3, 1, 4, 2, 1, 3, 2, 4)]
        np.testing.assert_array_equal(init_norm_sorted(data, 4), [(1, 0), (2, 0), (3, 0), (4, 0)])

    def test_norm_sorted_remainder_to_first_groups(self):
        data = [(v, 0) for v in (1, 2, 3, 4, 5, 6)]
        # groups of sizes 2, 2, 1, 1
        np.testing.assert_array_equal(init_norm_sorted(data, 4), [(1.5, 0), (3.5, 0), (5, 0), (6, 0)])

    def test_norm_sorted_gaussian_matches_oracle(self):
        data = np.random.default_rng(5).standard_normal((1000, 3))
        cb = init_norm_sorted(data, 4)
        # oracle: sort by norm, means of 250-row blocks
        rows = sorted(data.tolist(), key=lambda r: math.sqrt(sum(v * v for v in r)))
        blocks = [rows[k * 250:(k + 1) * 250] for k in range(4)]
        np.testing.assert_allclose(cb, [np.mean(b, axis=0) for b in blocks], rtol=0, atol=1e-12)
        # groups run from low to high norm; the group means themselves need not,
        # since a centred shell averages out towards the origin
        member_norms = [np.mean(np.linalg.norm(b, axis=1)) for b in blocks]
        assert np.all(np.diff(member_norms) > 0)

    def test_norm_sorted_codeword_norms_off_centre(self):
        data = np.random.default_rng(6).standard_normal((1000, 3)) + (4.0, 0.0, 0.0)
        cb = init_norm_sorted(data, 4)
        assert np.all(np.diff(np.linalg.norm(cb, axis=1)) > 0)

    def test_norm_sorted_subsamples_large_data(self):
        data = generate("gaussian", 5000, 0, dim=4)
        a = init_norm_sorted(data, 4, sample_count=1000, seed=3)
        b = init_norm_sorted(data, 4, sample_count=1000, seed=3)
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, init_norm_sorted(data, 4, sample_count=1000, seed=4))

    def test_norm_sorted_too_little_data(self):
        with pytest.raises(InsufficientDataError):
            init_norm_sorted([(1, 0), (2, 0)], 4)

    def test_random_deterministic(self):
        assert init_random(4, 2, seed=1).tobytes() == init_random(4, 2, seed=1).tobytes()

    def test_random_norm_concentration(self):
        # squared norm ~ chi2(512): mean 512, std 32, so +-15% is about +-2.4 std
        sq = np.concatenate([np.einsum("nd,nd->n", cb, cb)
                             for cb in (init_random(4, 512, seed=s) for s in range(50))])
        assert abs(sq.mean() - 512) < 0.02 * 512
        within = np.mean(np.abs(sq - 512) <= 0.15 * 512)
        assert within >= 0.95

    def test_random_shape(self):
        cb = init_random(2, 1, seed=9)
        assert cb.shape == (2, 1) and np.all(np.isfinite(cb))

    def test_random_too_small(self):
        with pytest.raises(ConfigError):
            init_random(1, 2)


# tiny nonzero coordinates make the projection ill-conditioned; flush them to 0
COORD = st.floats(-100, 100).map(lambda v: v if abs(v) > 1e-100 else 0.0)


class TestExpand:
    def test_two_codewords(self):
        np.testing.assert_array_equal(expand([(0, 0), (1, 0)]),
                                      [(0, 0), (0.01, 0), (0.99, 0), (1, 0)])

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 4)),
                  elements=COORD))
    def test_inserted_points_on_segments(self, c):
        out = expand(c)
        n = len(c)
        assert out.shape == (2 * n, c.shape[1])
        # originals keep their relative order at even slots, plus the tail
        np.testing.assert_array_equal(out[0:2 * n - 2:2], c[:-1])
        np.testing.assert_array_equal(out[-1], c[-1])
        inserted = [(2 * i + 1, i) for i in range(n - 1)] + [(2 * n - 2, n - 2)]
        for pos, seg in inserted:
            a, b = c[seg], c[seg + 1]
            d = b - a
            p = out[pos]
            if np.dot(d, d) == 0:
                np.testing.assert_allclose(p, a)
                continue
            t = np.dot(p - a, d) / np.dot(d, d)
            expected_t = 0.01 if pos != 2 * n - 2 else 0.99
            assert t == pytest.approx(expected_t, abs=1e-9)
            np.testing.assert_allclose(p, (1 - t) * a + t * b, atol=1e-9)

    def test_too_small(self):
        with pytest.raises(InsufficientDataError):
            expand([(0.0, 0.0)])


class TestDithered:
    C = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)])

    def test_example(self):
        a = assign_dithered([(0.4, 0.1)], self.C, [0.5, 0.5])
        d, k, entry = brute_dithered((0.4, 0.1), self.C, [0.5, 0.5])
        assert a.index[0] == k == 0
        np.testing.assert_array_equal(a.xhat[0], (0.5, 0.0))
        np.testing.assert_allclose(a.xhat[0], entry)
        assert a.sq_error[0] == pytest.approx(d)

    def test_exact_hit(self):
        entries = dithered_codebook(self.C, [0.3, 0.6])
        a = assign_dithered(entries[1:2], self.C, [0.3, 0.6])
        assert a.sq_error[0] == 0.0 and a.index[0] == 1

    def test_tie_goes_to_lowest_segment(self):
        c = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]
        a = assign_dithered([(1.0, 0.0)], c, [0.5, 0.5])
        assert a.index[0] == 0

    def test_reconstruction_identity(self):
        rng = np.random.default_rng(3)
        c = rng.standard_normal((6, 3))
        lam = rng.random(5)
        x = rng.standard_normal((50, 3))
        a = assign_dithered(x, c, lam)
        j = a.index
        np.testing.assert_array_equal(a.xhat, (1 - lam[j])[:, None] * c[j] + lam[j][:, None] * c[j + 1])
        np.testing.assert_allclose(a.sq_error, np.sum((x - a.xhat) ** 2, axis=1))
        for xi, ji in zip(x, j):
            assert brute_dithered(xi, c, lam)[1] == ji

    def test_per_sample_lambdas(self):
        rng = np.random.default_rng(4)
        c = rng.standard_normal((5, 2))
        x = rng.standard_normal((7, 2))
        lam = rng.random((7, 4))
        a = assign_dithered(x, c, lam)
        for i in range(7):
            assert brute_dithered(x[i], c, lam[i])[1] == a.index[i]
            assert a.lam[i] == lam[i, a.index[i]]

    def test_dimension_errors(self):
        with pytest.raises(DimensionError):
            assign_dithered([(1.0, 2.0, 3.0)], self.C, [0.5, 0.5])
        with pytest.raises(DimensionError):
            assign_dithered([(1.0, 2.0)], self.C, [0.5])


class TestLossGrad:
    def test_perfect_reconstruction(self):
        c = np.array([(0.0, 0.0), (1.0, 2.0), (3.0, 1.0)])
        loss, grads, _ = sfvq_loss_grad(c[:1], c, [0.0, 0.5])
        assert loss == 0.0
        assert not np.any(grads)

    def test_one_dimensional_example(self):
        loss, grads, a = sfvq_loss_grad([(0.7,)], [(0.0,), (1.0,)], [0.5])
        assert a.xhat[0, 0] == 0.5
        assert loss == pytest.approx(0.04, abs=1e-15)
        np.testing.assert_allclose(grads, [(-0.2,), (-0.2,)], atol=1e-15)
        fd = finite_difference_grad(np.array([(0.7,)]), np.array([(0.0,), (1.0,)]),
                                    np.array([0.5]), a.index)
        np.testing.assert_allclose(grads, fd, atol=1e-10)

    def test_duplication_invariance(self):
        rng = np.random.default_rng(8)
        c = rng.standard_normal((5, 3))
        x = rng.standard_normal((11, 3))
        lam = rng.random(4)
        l1, g1, _ = sfvq_loss_grad(x, c, lam)
        l2, g2, _ = sfvq_loss_grad(np.vstack([x, x]), c, lam)
        assert l2 == pytest.approx(l1, rel=1e-14)
        np.testing.assert_allclose(g2, g1, rtol=1e-12, atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 8), st.integers(1, 5), st.integers(1, 16))
    def test_matches_finite_differences(self, seed, n, dim, batch):
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((n, dim))
        x = rng.standard_normal((batch, dim))
        lam = rng.random(n - 1)
        _, grads, a = sfvq_loss_grad(x, c, lam)
        fd = finite_difference_grad(x, c, lam, a.index)
        denom = max(np.linalg.norm(fd), np.linalg.norm(grads), 1e-12)
        assert np.linalg.norm(grads - fd) / denom < 1e-4

    def test_unused_codewords_get_zero(self):
        c = np.array([(0.0,), (1.0,), (10.0,), (11.0,)])
        _, grads, _ = sfvq_loss_grad([(0.2,), (0.3,)], c, [0.5, 0.5, 0.5])
        assert np.all(grads[2:] == 0)

    def test_vq_gradient(self):
        c = np.array([(0.0,), (1.0,)])
        loss, grads, a = vq_loss_grad([(0.2,), (0.9,)], c)
        np.testing.assert_array_equal(a.index, [0, 1])
        assert loss == pytest.approx((0.04 + 0.01) / 2)
        np.testing.assert_allclose(grads, [(-0.2,), (0.1,)])


class TestInference:
    def test_nearest_exact(self):
        c = np.array([(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (5.0, 5.0)])
        idx, xhat, err = quantize_nearest(c[2], c)
        assert idx == 2 and err == 0.0
        np.testing.assert_array_equal(xhat, c[2])

    def test_nearest_arith(self):
        idx, _, err = quantize_nearest([0.9], [(0.0,), (2.0,)])
        assert idx == 0 and err == pytest.approx(0.81)

    def test_nearest_tie(self):
        assert quantize_nearest([1.0], [(0.0,), (2.0,)])[0] == 0

    def test_segment_projection(self):
        a = quantize_segment([0.5, 0.3], [(0.0, 0.0), (1.0, 0.0)])
        assert a.index == 0 and a.lam == 0.5
        np.testing.assert_array_equal(a.xhat, (0.5, 0.0))
        assert a.sq_error == pytest.approx(0.09)

    def test_segment_clamp(self):
        a = quantize_segment([2.0, 0.0], [(0.0, 0.0), (1.0, 0.0)])
        assert a.lam == 1.0
        np.testing.assert_array_equal(a.xhat, (1.0, 0.0))

    def test_zero_length_segment(self):
        a = quantize_segment([2.0, 1.0], [(1.0, 1.0), (1.0, 1.0), (3.0, 1.0)])
        assert a.sq_error == 0.0 and a.index == 1

    def test_segment_matches_dense_grid(self):
        rng = np.random.default_rng(12)
        grid = np.linspace(0.0, 1.0, 1001)
        for _ in range(50):
            c = rng.standard_normal((5, 3))
            x = rng.standard_normal(3)
            a = quantize_segment(x, c)
            pts = (1 - grid)[None, :, None] * c[:-1, None, :] + grid[None, :, None] * c[1:, None, :]
            err = np.sum((pts - x) ** 2, axis=2)
            seg, k = np.unravel_index(np.argmin(err), err.shape)
            assert seg == a.index
            assert abs(grid[k] - a.lam) <= 1e-3
            assert abs(err[seg, k] - a.sq_error) <= 1e-4

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 10), st.integers(1, 4))
    def test_segment_never_worse_than_codeword(self, seed, n, dim):
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((n, dim))
        x = rng.standard_normal((30, dim)) * 2
        seg = quantize_segment_batch(x, c).sq_error
        for xi, s in zip(x, seg):
            assert s <= quantize_nearest(xi, c)[2]

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 10), st.integers(1, 4))
    def test_dither_never_beats_projection(self, seed, n, dim):
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((n, dim))
        x = rng.standard_normal((30, dim))
        dith = assign_dithered(x, c, rng.random(n - 1)).sq_error
        proj = quantize_segment_batch(x, c).sq_error
        assert np.all(dith >= proj - 1e-12 * (1 + proj))

    def test_expansion_preserves_segment_distortion(self):
        rng = np.random.default_rng(21)
        c = rng.standard_normal((8, 3))
        x = rng.standard_normal((500, 3))
        before = segment_distortion(x, c)
        after = segment_distortion(x, expand(c))
        assert abs(after - before) <= 1e-6 * before

    def test_distortion_ordering(self):
        x = generate("gaussian", 400, 3, dim=2)
        c = init_norm_sorted(x, 4)
        assert segment_distortion(x, c) <= codeword_distortion(x, c)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            quantize_nearest([1.0, 2.0], [(0.0,), (1.0,)])
        with pytest.raises(DimensionError):
            quantize_segment([1.0, 2.0], [(0.0,), (1.0,)])


class TestTrain:
    def test_stage_sizes_and_final_size(self):
        data = generate("pentagon2d", 2000, 7)
        cb, hist = train(TrainConfig(target_bits=6, batches_per_stage=20, seed=1), data)
        assert cb.shape == (64, 2)
        assert bits_of(cb) == 6
        assert [h.n_codewords for h in hist] == [4, 8, 16, 32, 64]

    def test_loss_decreases(self):
        data = generate("gaussian", 5000, 2, dim=2)
        _, hist = train(TrainConfig(target_bits=4, batches_per_stage=2000, seed=0), data)
        assert hist[-1].mean_loss < hist[0].initial_loss

    @pytest.mark.parametrize("mode, init, lam", [
        ("sfvq", "norm_sorted", "per_segment"),
        ("sfvq", "random_normal", "per_sample"),
        ("vq", "norm_sorted", "per_segment"),
    ])
    def test_deterministic(self, mode, init, lam):
        data = generate("moons3d", 1000, 4)
        cfg = TrainConfig(target_bits=3, batches_per_stage=100, seed=5, mode=mode,
                          init_mode=init, lambda_mode=lam)
        a = train(cfg, data).codebook
        b = train(cfg, data).codebook
        assert a.tobytes() == b.tobytes()
        assert a.shape == (8, 3)

    def test_first_stage_starts_from_norm_sorted_init(self):
        data = generate("gaussian", 3000, 1, dim=3) + 3.0
        cfg = TrainConfig(target_bits=2, batches_per_stage=1, base_lr=1e-12, seed=4)
        init = init_norm_sorted(data, 4, 1000, np.random.default_rng(4))
        cb, _ = train(cfg, data)
        np.testing.assert_allclose(cb, init, atol=1e-9)
        assert np.all(np.diff(np.linalg.norm(cb, axis=1)) > 0)

    def test_progress_log(self):
        data = generate("gaussian", 200, 1, dim=2)
        buf = io.StringIO()
        train(TrainConfig(target_bits=2, batches_per_stage=10, log_every=5), data, log=buf)
        lines = buf.getvalue().splitlines()
        assert [ln.split("\t")[0] for ln in lines] == ["0", "5"]
        assert all(len(ln.split("\t")) == 3 for ln in lines)
        assert float(lines[0].split("\t")[2]) == 1e-3

    def test_config_errors(self):
        with pytest.raises(ConfigError):
            TrainConfig(target_bits=1)
        with pytest.raises(ConfigError):
            TrainConfig(target_bits=13)
        with pytest.raises(ConfigError):
            TrainConfig(mode="kmeans")
        with pytest.raises(ConfigError):
            TrainConfig(batch_size=0)

    def test_insufficient_data(self):
        with pytest.raises(InsufficientDataError):
            train(TrainConfig(target_bits=2, batches_per_stage=5), np.zeros((10, 2)))
        with pytest.raises(InsufficientDataError):
            train(TrainConfig(target_bits=2), np.zeros((0, 2)))
