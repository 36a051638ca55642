"""Window-based change-point segmentation of embedding sequences.

The similarity kernel is cosine; since every stored vector is unit-norm or
degenerate-zero, the kernel reduces to a dot product with degenerate entries
contributing 0 (including their own diagonal term). The within-segment cost of
the subsequence covered by the half-open index slice [a, b) is

    c(a, b) = sum_t k(e_t, e_t)  -  (1/(b-a)) * sum_{s,t} k(e_s, e_t)

which collapses to  nd(a, b) - ||P[b] - P[a]||^2 / (b - a)  using prefix sums
P of the (zero-filled) vectors and a prefix count nd of non-degenerate rows.
The discrepancy of a split v inside [u, w) is the cost drop
c(u, w) - c(u, v) - c(v, w); it is nonnegative up to rounding.

Detection slides symmetric windows of width w: d(v) = discrepancy over
[v-w, v+w) split at v, for v in [w, n-w]; change points are the highest local
maxima of d subject to a minimum pairwise separation, capped at N-1. A change
index v names the first position of the new regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import check_embedding_matrix, check_positive_int
from .embedding import DEGENERATE_NORM, DIM

__all__ = [
    "EmbeddingSequence",
    "SegmentationParams",
    "SegmentationResult",
    "cosine_kernel",
    "segment_cost",
    "discrepancy",
    "win_change_points",
    "default_window_width",
    "WindowChangePointDetector",
    "FirstComponentProjector",
    "pca_first_component",
]

_PEAK_EPS = 1e-9


@dataclass(frozen=True)
class EmbeddingSequence:
    """Per-time-point behavior embeddings of one agent.

    `times` are the ticks that actually carry operations, strictly increasing
    but not necessarily contiguous. `vectors` has one row per time, unit-norm
    or degenerate-zero.
    """

    agent: str
    times: tuple[int, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        vec = check_embedding_matrix(self.vectors)
        if vec.shape[0] != len(self.times):
            raise ValueError("times and vectors disagree in length")
        if vec.shape[0] and vec.shape[1] != DIM:
            raise ValueError(f"vectors must have {DIM} columns, got {vec.shape[1]}")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "vectors", vec)

    def __len__(self) -> int:
        return len(self.times)

    def degenerate_mask(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1) < DEGENERATE_NORM


@dataclass(frozen=True)
class SegmentationParams:
    window_width: int | None = None
    target_segments: int = 10
    min_separation: int | None = None

    def resolve(self, length: int) -> tuple[int, int, int]:
        n_seg = check_positive_int(self.target_segments, "target_segments")
        if self.window_width is None:
            w = default_window_width(length, n_seg)
        else:
            w = check_positive_int(self.window_width, "window_width")
        sep = w if self.min_separation is None else check_positive_int(
            self.min_separation, "min_separation")
        return w, n_seg, sep


@dataclass(frozen=True)
class SegmentationResult:
    """Change points plus the diagnostic discrepancy curve.

    `change_indices` are positions into the sequence (split boundaries);
    `change_points` are the corresponding times, i.e. the tick opening each
    new regime. Segment Behaviors are attached by the pipeline stage.
    """

    agent: str
    change_indices: tuple[int, ...]
    change_points: tuple[int, ...]
    curve_indices: tuple[int, ...]
    curve_scores: tuple[float, ...]
    segments: tuple = field(default=())

    def curve(self) -> dict[int, float]:
        return dict(zip(self.curve_indices, self.curve_scores))


def default_window_width(length: int, target_segments: int) -> int:
    return max(4, math.ceil(length / (2 * target_segments)))


def cosine_kernel(x: np.ndarray, y: np.ndarray) -> float:
    """Cosine similarity; any degenerate side is defined as 0."""
    nx = float(np.linalg.norm(x))
    ny = float(np.linalg.norm(y))
    if nx < DEGENERATE_NORM or ny < DEGENERATE_NORM:
        return 0.0
    return float(np.dot(x, y) / (nx * ny))


class _PrefixCost:
    """O(1) segment cost after O(n·d) preprocessing."""

    def __init__(self, vectors: np.ndarray) -> None:
        vec = np.asarray(vectors, dtype=np.float64)
        norms = np.linalg.norm(vec, axis=1)
        nondeg = norms >= DEGENERATE_NORM
        unit = np.zeros_like(vec)
        if vec.size:
            unit[nondeg] = vec[nondeg] / norms[nondeg, None]
        self.n = vec.shape[0]
        self._P = np.concatenate([np.zeros((1, vec.shape[1])), np.cumsum(unit, axis=0)])
        self._nd = np.concatenate([[0], np.cumsum(nondeg.astype(np.int64))])

    def cost(self, a: int, b: int) -> float:
        if not (0 <= a < b <= self.n):
            raise ValueError(f"invalid index range ({a}, {b}) for length {self.n}")
        diff = self._P[b] - self._P[a]
        raw = float(self._nd[b] - self._nd[a]) - float(np.dot(diff, diff)) / (b - a)
        # Mathematically >= 0; clamp the rounding tail so callers can rely on it.
        return raw if raw > 0.0 else 0.0


def segment_cost(seq: EmbeddingSequence | np.ndarray, a: int, b: int) -> float:
    """Within-segment cost of the index slice [a, b)."""
    vectors = seq.vectors if isinstance(seq, EmbeddingSequence) else np.asarray(seq)
    return _PrefixCost(vectors).cost(a, b)


def discrepancy(seq: EmbeddingSequence | np.ndarray, u: int, v: int, w: int) -> float:
    """Cost drop from splitting [u, w) at v: c(u,w) - c(u,v) - c(v,w)."""
    vectors = seq.vectors if isinstance(seq, EmbeddingSequence) else np.asarray(seq)
    if not (0 <= u < v < w <= len(vectors)):
        raise ValueError(f"need 0 <= u < v < w <= len, got ({u}, {v}, {w})")
    pc = _PrefixCost(vectors)
    return pc.cost(u, w) - pc.cost(u, v) - pc.cost(v, w)


def _detect(vectors: np.ndarray, params: SegmentationParams) -> tuple[
        tuple[int, ...], tuple[int, ...], tuple[float, ...]]:
    n = vectors.shape[0]
    w, n_seg, sep = params.resolve(n)
    if n < 2 * w:
        return (), (), ()
    pc = _PrefixCost(vectors)
    candidates = list(range(w, n - w + 1))
    scores = [pc.cost(v - w, v + w) - pc.cost(v - w, v) - pc.cost(v, v + w)
              for v in candidates]

    peaks: list[tuple[float, int]] = []
    last = len(candidates) - 1
    for i, v in enumerate(candidates):
        if scores[i] <= _PEAK_EPS:
            continue
        rising = i == 0 or scores[i] > scores[i - 1]
        falling = i == last or scores[i] >= scores[i + 1]
        if rising and falling:
            peaks.append((scores[i], v))

    kept: list[int] = []
    for score, v in sorted(peaks, key=lambda p: (-p[0], p[1])):
        if len(kept) >= n_seg - 1:
            break
        if all(abs(v - k) >= sep for k in kept):
            kept.append(v)
    kept.sort()
    return tuple(kept), tuple(candidates), tuple(scores)


def win_change_points(
    seq: EmbeddingSequence,
    params: SegmentationParams | None = None,
) -> SegmentationResult:
    """Sliding-window change-point detection over an embedding sequence.

    A sequence shorter than two windows yields no change points. Results are
    deterministic: ties in peak score break toward the earlier index.
    """
    params = params or SegmentationParams()
    indices, cand, scores = _detect(seq.vectors, params)
    return SegmentationResult(
        agent=seq.agent,
        change_indices=indices,
        change_points=tuple(seq.times[v] for v in indices),
        curve_indices=cand,
        curve_scores=scores,
    )


class WindowChangePointDetector(BaseEstimator):
    """Estimator wrapper over the sliding-window detector.

    fit(X) treats the rows of X as an ordered embedding sequence and exposes
    `change_points_` (split indices into X) and `discrepancy_curve_`;
    predict(X) labels each row with its segment number.
    """

    def __init__(self, window_width: int | None = None, target_segments: int = 10,
                 min_separation: int | None = None):
        self.window_width = window_width
        self.target_segments = target_segments
        self.min_separation = min_separation

    def _params(self) -> SegmentationParams:
        return SegmentationParams(
            window_width=self.window_width,
            target_segments=self.target_segments,
            min_separation=self.min_separation,
        )

    def fit(self, X, y=None):
        X = check_embedding_matrix(X)
        indices, cand, scores = _detect(X, self._params())
        self.n_features_in_ = X.shape[1]
        self.change_points_ = indices
        self.discrepancy_curve_ = dict(zip(cand, scores))
        return self

    def predict(self, X):
        if not hasattr(self, "change_points_"):
            raise NotFittedError("call fit before predict")
        X = check_embedding_matrix(X)
        labels = np.zeros(X.shape[0], dtype=np.int64)
        for cp in self.change_points_:
            labels[cp:] += 1
        return labels

    def fit_predict(self, X, y=None):
        return self.fit(X).predict(X)


class FirstComponentProjector(BaseEstimator, TransformerMixin):
    """Projection onto the first principal component of the fitted rows.

    Sign convention: the first nonzero loading of the component is positive.
    A rank-0 fit (all rows identical) stores a zero component, so transforms
    map everything to 0.
    """

    def fit(self, X, y=None):
        X = check_embedding_matrix(X, min_rows=1)
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        self.n_features_in_ = X.shape[1]
        if np.allclose(centered, 0.0, atol=1e-12):
            self.component_ = np.zeros(X.shape[1])
            return self
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        component = vt[0]
        nonzero = np.nonzero(np.abs(component) > 1e-12)[0]
        if nonzero.size and component[nonzero[0]] < 0:
            component = -component
        self.component_ = component
        return self

    def transform(self, X):
        if not hasattr(self, "component_"):
            raise NotFittedError("call fit before transform")
        X = check_embedding_matrix(X)
        return (X - self.mean_) @ self.component_.reshape(-1, 1)


def pca_first_component(seq: EmbeddingSequence) -> np.ndarray:
    """First-component projection per time point, fitted on the sequence's
    non-degenerate vectors. Needs at least two of them."""
    mask = ~seq.degenerate_mask()
    if int(mask.sum()) < 2:
        raise ValueError("need at least 2 non-degenerate vectors")
    proj = FirstComponentProjector().fit(seq.vectors[mask])
    return proj.transform(seq.vectors).ravel()
