import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from agentlens.embedding import DIM, fallback_embed
from agentlens.segment import (
    EmbeddingSequence,
    FirstComponentProjector,
    SegmentationParams,
    WindowChangePointDetector,
    cosine_kernel,
    default_window_width,
    discrepancy,
    pca_first_component,
    segment_cost,
    win_change_points,
)


def unit(axis):
    v = np.zeros(DIM)
    v[axis] = 1.0
    return v


def seq_of(rows, agent="a", times=None):
    rows = np.asarray(rows, dtype=np.float64)
    times = tuple(range(len(rows))) if times is None else tuple(times)
    return EmbeddingSequence(agent=agent, times=times, vectors=rows)


# Reference implementation: the cost double-sum evaluated term by term,
# sharing no code with the prefix-sum path under test.
def oracle_kernel(x, y):
    nx = math.sqrt(sum(c * c for c in x))
    ny = math.sqrt(sum(c * c for c in y))
    if nx < 1e-12 or ny < 1e-12:
        return 0.0
    return sum(a * b for a, b in zip(x, y)) / (nx * ny)


def oracle_cost(rows, a, b):
    total = 0.0
    for t in range(a, b):
        total += oracle_kernel(rows[t], rows[t])
    double = 0.0
    for s in range(a, b):
        for t in range(a, b):
            double += oracle_kernel(rows[s], rows[t])
    return total - double / (b - a)


def oracle_discrepancy(rows, u, v, w):
    return oracle_cost(rows, u, w) - oracle_cost(rows, u, v) - oracle_cost(rows, v, w)


class TestCosineKernel:
    def test_self_similarity_is_one(self):
        v = fallback_embed("a wandering cat")
        assert cosine_kernel(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_axes(self):
        assert cosine_kernel(unit(0), unit(1)) == 0.0

    def test_hand_computed_value(self):
        x, y = np.zeros(DIM), np.zeros(DIM)
        x[0], x[1] = 3.0, 4.0
        y[0], y[1] = 4.0, 3.0
        assert cosine_kernel(x, y) == pytest.approx(0.96, abs=1e-12)

    def test_degenerate_side_is_zero(self):
        assert cosine_kernel(np.zeros(DIM), unit(0)) == 0.0

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_symmetry_and_self_unity_on_random_vectors(self, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=DIM)
        y = rng.normal(size=DIM)
        assert cosine_kernel(x, y) == pytest.approx(cosine_kernel(y, x), abs=1e-12)
        assert cosine_kernel(x, x) == pytest.approx(1.0, abs=1e-9)


class TestSegmentCost:
    def test_constant_sequence_costs_zero(self):
        rows = [unit(3)] * 6
        for a in range(6):
            for b in range(a + 1, 7):
                assert segment_cost(seq_of(rows), a, b) == pytest.approx(0.0, abs=1e-9)

    def test_single_element_range_is_zero(self):
        assert segment_cost(seq_of([unit(0), unit(1)]), 1, 2) == pytest.approx(0.0, abs=1e-12)

    def test_two_block_cost_frozen_value(self):
        rows = [unit(0), unit(0), unit(1), unit(1)]
        assert segment_cost(seq_of(rows), 0, 4) == pytest.approx(2.0, abs=1e-9)

    def test_empty_range_rejected(self):
        with pytest.raises(ValueError):
            segment_cost(seq_of([unit(0)] * 3), 2, 2)
        with pytest.raises(ValueError):
            segment_cost(seq_of([unit(0)] * 3), 2, 1)

    def test_matches_reference_double_sum_on_random_sequences(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(2, 12))
            rows = rng.normal(size=(n, DIM))
            rows /= np.linalg.norm(rows, axis=1, keepdims=True)
            if rng.random() < 0.5:
                rows[int(rng.integers(0, n))] = 0.0
            a = int(rng.integers(0, n - 1))
            b = int(rng.integers(a + 1, n + 1))
            assert segment_cost(rows, a, b) == pytest.approx(
                oracle_cost(rows, a, b), abs=1e-9)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_nonnegative_on_random_subsequences(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 10))
        rows = rng.normal(size=(n, DIM))
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        a = int(rng.integers(0, n - 1))
        b = int(rng.integers(a + 1, n + 1))
        assert segment_cost(rows, a, b) >= -1e-9


class TestDiscrepancy:
    def test_homogeneous_split_is_zero(self):
        rows = [unit(2)] * 8
        for v in range(1, 8):
            assert discrepancy(seq_of(rows), 0, v, 8) == pytest.approx(0.0, abs=1e-9)

    def test_two_block_split_at_boundary(self):
        rows = [unit(0), unit(0), unit(1), unit(1)]
        assert discrepancy(seq_of(rows), 0, 2, 4) == pytest.approx(2.0, abs=1e-9)

    def test_two_block_split_off_boundary(self):
        rows = [unit(0), unit(0), unit(1), unit(1)]
        assert discrepancy(seq_of(rows), 0, 1, 4) == pytest.approx(2.0 - 4.0 / 3.0, abs=1e-6)

    def test_index_order_enforced(self):
        rows = seq_of([unit(0)] * 5)
        for u, v, w in [(2, 2, 4), (0, 4, 3), (3, 1, 4), (-1, 1, 3), (0, 1, 6)]:
            with pytest.raises(ValueError):
                discrepancy(rows, u, v, w)

    def test_best_split_of_two_homogeneous_blocks_is_the_boundary(self):
        for n in range(4, 13):
            for b in range(2, n - 1):
                rows = [unit(0)] * b + [unit(1)] * (n - b)
                scores = {v: discrepancy(seq_of(rows), 0, v, n) for v in range(1, n)}
                assert max(scores, key=scores.get) == b

    def test_matches_reference_on_random_windows(self):
        rng = np.random.default_rng(11)
        for _ in range(15):
            n = int(rng.integers(3, 12))
            rows = rng.normal(size=(n, DIM))
            rows /= np.linalg.norm(rows, axis=1, keepdims=True)
            u = int(rng.integers(0, n - 2))
            v = int(rng.integers(u + 1, n - 1))
            w = int(rng.integers(v + 1, n + 1))
            assert discrepancy(rows, u, v, w) == pytest.approx(
                oracle_discrepancy(rows, u, v, w), abs=1e-9)


class TestWinChangePoints:
    def test_constant_sequence_has_no_change_points(self):
        res = win_change_points(seq_of([unit(0)] * 20), SegmentationParams(window_width=4))
        assert res.change_indices == ()
        assert res.change_points == ()

    def test_two_block_toy_frozen_curve(self):
        rows = [unit(0)] * 5 + [unit(1)] * 5
        res = win_change_points(seq_of(rows), SegmentationParams(window_width=4))
        assert res.curve_indices == (4, 5, 6)
        assert res.curve_scores[0] == pytest.approx(2.25, abs=1e-9)
        assert res.curve_scores[1] == pytest.approx(4.0, abs=1e-9)
        assert res.curve_scores[2] == pytest.approx(2.25, abs=1e-9)
        assert res.change_indices == (5,)
        assert res.change_points == (5,)

    def test_change_point_time_comes_from_the_times_axis(self):
        rows = [unit(0)] * 5 + [unit(1)] * 5
        times = tuple(100 + 3 * i for i in range(10))
        res = win_change_points(seq_of(rows, times=times), SegmentationParams(window_width=4))
        assert res.change_indices == (5,)
        assert res.change_points == (115,)

    def test_too_short_sequence_returns_empty(self):
        res = win_change_points(seq_of([unit(0), unit(1)] * 2), SegmentationParams(window_width=4))
        assert res.change_indices == ()
        assert res.curve_indices == ()

    def test_exact_tie_breaks_to_earlier_index(self):
        rows = [unit(0)] * 4 + [unit(1)] * 4 + [unit(0)] * 4 + [unit(1)] * 4
        params = SegmentationParams(window_width=2, target_segments=2)
        res = win_change_points(seq_of(rows), params)
        assert res.change_indices == (4,)

    def test_min_separation_suppresses_near_peaks(self):
        rows = [unit(0)] * 4 + [unit(1)] * 4 + [unit(0)] * 4 + [unit(1)] * 4
        res = win_change_points(
            seq_of(rows),
            SegmentationParams(window_width=2, target_segments=4, min_separation=5))
        assert res.change_indices == (4, 12)
        res2 = win_change_points(
            seq_of(rows),
            SegmentationParams(window_width=2, target_segments=4, min_separation=4))
        assert res2.change_indices == (4, 8, 12)

    def test_cap_at_n_minus_one_change_points(self):
        rng = np.random.default_rng(3)
        rows = []
        for block in range(8):
            center = np.zeros(DIM)
            center[block] = 1.0
            for _ in range(8):
                rows.append(center + rng.normal(scale=0.05, size=DIM))
        res = win_change_points(
            seq_of(np.array(rows) / np.linalg.norm(rows, axis=1, keepdims=True)),
            SegmentationParams(window_width=4, target_segments=3))
        assert len(res.change_indices) <= 2

    def test_planted_three_cluster_recovery(self):
        rng = np.random.default_rng(42)
        centers = [fallback_embed("reading quietly in the library"),
                   fallback_embed("cooking a large dinner"),
                   fallback_embed("walking around the lake")]
        rows = []
        for c in centers:
            for _ in range(20):
                rows.append(c + rng.normal(scale=0.05, size=DIM))
        rows = np.array(rows)
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        res = win_change_points(
            seq_of(rows), SegmentationParams(window_width=8, target_segments=3))
        assert len(res.change_indices) == 2
        assert abs(res.change_indices[0] - 20) <= 4
        assert abs(res.change_indices[1] - 40) <= 4

    def test_determinism_across_runs(self):
        rng = np.random.default_rng(5)
        rows = rng.normal(size=(50, DIM))
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        s = seq_of(rows)
        first = win_change_points(s, SegmentationParams(window_width=5))
        second = win_change_points(s, SegmentationParams(window_width=5))
        assert first.change_indices == second.change_indices
        assert first.curve_scores == second.curve_scores

    def test_default_window_width_rule(self):
        assert default_window_width(200, 10) == 10
        assert default_window_width(10, 10) == 4
        assert default_window_width(201, 10) == 11


class TestExhaustiveSmallSequences:
    def test_curve_matches_reference_for_all_binary_sequences_up_to_length_7(self):
        basis = [unit(0), unit(1)]
        for n in range(4, 8):
            w = 2
            for mask in range(2 ** n):
                rows = np.array([basis[(mask >> i) & 1] for i in range(n)])
                s = seq_of(rows)
                res = win_change_points(s, SegmentationParams(window_width=w, target_segments=n))
                for v, score in zip(res.curve_indices, res.curve_scores):
                    assert score == pytest.approx(
                        oracle_discrepancy(rows, v - w, v, v + w), abs=1e-9)


class TestEmbeddingSequenceValidation:
    def test_times_must_increase(self):
        with pytest.raises(ValueError):
            seq_of([unit(0), unit(1)], times=(3, 3))

    def test_dimension_checked(self):
        with pytest.raises(ValueError):
            EmbeddingSequence(agent="a", times=(0,), vectors=np.zeros((1, 7)))

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingSequence(agent="a", times=(0, 1), vectors=np.zeros((3, DIM)))

    def test_degenerate_mask(self):
        s = seq_of([unit(0), np.zeros(DIM), unit(1)])
        assert s.degenerate_mask().tolist() == [False, True, False]


class TestDetectorEstimator:
    def test_fit_predict_labels_segments(self):
        rows = np.array([unit(0)] * 10 + [unit(1)] * 10)
        det = WindowChangePointDetector(window_width=4)
        labels = det.fit_predict(rows)
        assert det.change_points_ == (10,)
        assert labels.tolist() == [0] * 10 + [1] * 10

    def test_get_params_round_trip_and_clone(self):
        det = WindowChangePointDetector(window_width=6, target_segments=5, min_separation=3)
        params = det.get_params()
        assert params == {"window_width": 6, "target_segments": 5, "min_separation": 3}
        twin = clone(det)
        assert twin.get_params() == params

    def test_predict_before_fit_raises(self):
        with pytest.raises(NotFittedError):
            WindowChangePointDetector().predict(np.zeros((4, DIM)))

    def test_set_params_returns_self(self):
        det = WindowChangePointDetector()
        assert det.set_params(window_width=3) is det
        assert det.window_width == 3

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            WindowChangePointDetector().fit(np.zeros(5))
        with pytest.raises(ValueError):
            WindowChangePointDetector().fit([[np.nan, 0.0]])


class TestFirstComponent:
    def test_identical_vectors_project_to_zero(self):
        s = seq_of([unit(4)] * 5)
        assert pca_first_component(s).tolist() == [0.0] * 5

    def test_two_point_toy_closed_form(self):
        s = seq_of([unit(0), unit(1)])
        proj = pca_first_component(s)
        root_half = math.sqrt(2.0) / 2.0
        assert proj[0] == pytest.approx(root_half, abs=1e-9)
        assert proj[1] == pytest.approx(-root_half, abs=1e-9)

    def test_two_cluster_sign_separation(self):
        rng = np.random.default_rng(9)
        a = fallback_embed("feeding the chickens at dawn")
        b = fallback_embed("reviewing quarterly reports")
        rows = [a + rng.normal(scale=0.03, size=DIM) for _ in range(10)]
        rows += [b + rng.normal(scale=0.03, size=DIM) for _ in range(10)]
        rows = np.array(rows)
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        proj = pca_first_component(seq_of(rows))
        first, second = proj[:10], proj[10:]
        assert (np.sign(first) == np.sign(first[0])).all()
        assert (np.sign(second) == np.sign(second[0])).all()
        assert np.sign(first[0]) != np.sign(second[0])

    def test_requires_two_nondegenerate_vectors(self):
        with pytest.raises(ValueError):
            pca_first_component(seq_of([unit(0), np.zeros(DIM)]))

    def test_transformer_api(self):
        rows = np.array([unit(0), unit(1), unit(0)])
        proj = FirstComponentProjector().fit(rows)
        out = proj.transform(rows)
        assert out.shape == (3, 1)
        with pytest.raises(NotFittedError):
            FirstComponentProjector().transform(rows)

    def test_sign_convention_first_nonzero_loading_positive(self):
        rows = np.array([unit(3), unit(5), unit(3), unit(5)])
        proj = FirstComponentProjector().fit(rows)
        nz = np.nonzero(np.abs(proj.component_) > 1e-12)[0]
        assert proj.component_[nz[0]] > 0
