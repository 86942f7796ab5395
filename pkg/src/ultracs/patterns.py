"""Illumination pattern design against a time-resolved transport stack.

Each measurement modulates the scene with a pattern row g, so the total
sensing operator interleaves patterns with every sensor's transport
matrix.  Its Gram factors as (H^T H) o (Lam^T Lam), which lets the
average-coherence objective and its gradient be evaluated from the L x L
normalized transport Gram alone, with no giant operator assembled in the
loop.  Patterns live in the box [-1, 1] (realizable as two exposures of
nonnegative masks); optimization is projected gradient descent with a
backtracking line search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.linalg

from .transport import TransportMatrix

_BOX_TOL = 1e-12


@dataclass
class StackedTransport:
    """All sensors' transport matrices stacked vertically, sensor-major.

    column_weights holds the per-pixel squared column norms of the stack,
    the constant the normalized Gram divides by.
    """

    matrix: np.ndarray
    row_offsets: tuple[int, ...]  # start row of each sensor block, plus total
    column_weights: np.ndarray

    @classmethod
    def from_transports(cls, transports: Sequence[TransportMatrix]) -> "StackedTransport":
        if not transports:
            raise ValueError("need at least one transport matrix")
        l = transports[0].entries.shape[1]
        for t in transports:
            if t.entries.shape[1] != l:
                raise ValueError("transport matrices disagree on pixel count")
        offsets = [0]
        for t in transports:
            offsets.append(offsets[-1] + t.entries.shape[0])
        matrix = np.vstack([t.entries for t in transports])
        return cls(matrix, tuple(offsets), np.sum(matrix * matrix, axis=0))

    @property
    def n_pixels(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_sensors(self) -> int:
        return len(self.row_offsets) - 1


def stack_transports(transports: Sequence[TransportMatrix]) -> StackedTransport:
    return StackedTransport.from_transports(transports)


@dataclass
class GramCache:
    """Column-normalized transport Gram, precomputed once per geometry.

    w[l, l'] is the cosine between stacked transport columns l and l';
    the diagonal is exactly one.
    """

    w: np.ndarray
    column_norms: np.ndarray


def normalized_transport_gram(stacked: Union[StackedTransport, np.ndarray]) -> GramCache:
    h = stacked.matrix if isinstance(stacked, StackedTransport) else np.asarray(stacked)
    g = h.T @ h
    norms = np.sqrt(np.diag(g).copy())
    dead = np.flatnonzero(norms == 0)
    if dead.size:
        raise ValueError(
            f"stacked transport has {dead.size} all-zero columns "
            f"(first pixel index {dead[0]}); no pattern can sense them"
        )
    w = g / np.outer(norms, norms)
    np.fill_diagonal(w, 1.0)
    return GramCache(w, norms)


def _as_w(gram: Union[GramCache, np.ndarray]) -> np.ndarray:
    return gram.w if isinstance(gram, GramCache) else np.asarray(gram, dtype=np.float64)


def _pattern_scales(
    lam: np.ndarray, phi: np.ndarray, diag_floor: float | None
) -> np.ndarray:
    s = np.diag(phi).copy()
    if diag_floor is None:
        dead = np.flatnonzero(s == 0)
        if dead.size:
            raise ValueError(
                f"patterns never illuminate pixel {dead[0]} "
                f"({dead.size} dark pixels total)"
            )
    else:
        np.maximum(s, diag_floor, out=s)
    return s


def _gamma_terms(
    lam: np.ndarray, w: np.ndarray, diag_floor: float | None
) -> tuple[float, np.ndarray, np.ndarray]:
    """Objective plus the (phi, 1/diag) intermediates the gradient reuses."""
    phi = lam.T @ lam
    inv_s = 1.0 / _pattern_scales(lam, phi, diag_floor)
    t = w * phi
    t *= t  # now W^2 o Phi^2
    np.fill_diagonal(t, 0.0)
    gamma = float(inv_s @ (t @ inv_s))
    return gamma, phi, inv_s


def coherence_cost(
    lam: np.ndarray,
    gram: Union[GramCache, np.ndarray],
    diag_floor: float | None = None,
) -> float:
    """Off-diagonal Gram energy of the total operator, straight from W.

    Equals ||I - Q~^T Q~||_F^2 for the assembled, column-normalized total
    operator Q built from these patterns (columns of Q are nonzero exactly
    when the pattern energy diagonal is).  Cost is O(M L^2 + L^2), not
    O(M N L^2), because only the L x L Gram is touched.
    """
    lam = np.asarray(lam, dtype=np.float64)
    gamma, _, _ = _gamma_terms(lam, _as_w(gram), diag_floor)
    return gamma


def _grad_from_terms(
    lam: np.ndarray,
    w2: np.ndarray,
    phi: np.ndarray,
    inv_s: np.ndarray,
) -> np.ndarray:
    a1 = w2 * phi
    np.fill_diagonal(a1, 0.0)
    a2 = a1 * phi  # W^2 o Phi^2, diag already zero
    v = 2.0 * inv_s * (a2 @ inv_s)
    a1 *= inv_s[:, None]
    c1 = 2.0 * (lam @ a1)
    return 2.0 * (c1 - lam * v[None, :]) * inv_s[None, :]


def coherence_grad(
    lam: np.ndarray,
    gram: Union[GramCache, np.ndarray],
    diag_floor: float | None = None,
) -> np.ndarray:
    """Exact gradient of coherence_cost with respect to the pattern matrix."""
    lam = np.asarray(lam, dtype=np.float64)
    w = _as_w(gram)
    _, phi, inv_s = _gamma_terms(lam, w, diag_floor)
    return _grad_from_terms(lam, w * w, phi, inv_s)


@dataclass
class PgdTrace:
    """Optimization diagnostics: objective per accepted iterate and exit state."""

    gamma_history: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    backtracks: int = 0
    final_step: float = 0.0


@dataclass
class PatternSet:
    """M illumination patterns over L pixels, values in [-1, 1]."""

    values: np.ndarray
    provenance: str
    info: PgdTrace | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("patterns must be a 2-D (M, L) array")
        if not np.all(np.isfinite(v)):
            raise ValueError("patterns contain non-finite values")
        if np.max(np.abs(v)) > 1.0 + _BOX_TOL:
            raise ValueError("pattern values must lie in [-1, 1]")
        if np.any(np.all(v == 0, axis=1)):
            raise ValueError("all-zero pattern rows measure nothing")
        self.values = v

    @property
    def n_patterns(self) -> int:
        return self.values.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.values.shape[1]


def optimize_patterns(
    stacked: Union[StackedTransport, np.ndarray, GramCache],
    m: int,
    seed: int = 0,
    max_iter: int = 2000,
    tol: float = 1e-7,
    patience: int = 10,
    step0: float = 1.0,
    armijo: float = 1e-4,
    diag_floor: float = 1e-12,
    gram: GramCache | None = None,
) -> PatternSet:
    """Design M patterns minimizing the average-coherence objective.

    Projected gradient descent from a random sign matrix: step along the
    negative gradient, clip to the box, and backtrack the step until the
    decrease clears an Armijo fraction of <grad, step taken>.  Accepted
    iterates are strictly monotone in the objective.  Stops after
    `patience` consecutive relative decreases under `tol`, or at max_iter.

    Pass `gram` (or a GramCache directly) to reuse a precomputed transport
    Gram across pattern counts for the same geometry.
    """
    if m < 1:
        raise ValueError("need at least one pattern")
    if isinstance(stacked, GramCache):
        cache = stacked
    elif gram is not None:
        cache = gram
    else:
        cache = normalized_transport_gram(stacked)
    w = cache.w
    l = w.shape[0]
    w2 = w * w
    rng = np.random.default_rng(seed)
    lam = rng.choice([-1.0, 1.0], size=(m, l))
    gamma, phi, inv_s = _gamma_terms(lam, w, diag_floor)
    trace = PgdTrace(gamma_history=[gamma], final_step=step0)
    step = step0
    stall = 0
    for it in range(1, max_iter + 1):
        g = _grad_from_terms(lam, w2, phi, inv_s)
        accepted = False
        for _ in range(60):
            cand = np.clip(lam - step * g, -1.0, 1.0)
            gamma_c, phi_c, inv_s_c = _gamma_terms(cand, w, diag_floor)
            # projected-step Armijo: compare against the step actually taken
            needed = armijo * float(np.sum(g * (lam - cand)))
            if gamma_c <= gamma - needed and gamma_c < gamma:
                accepted = True
                break
            step *= 0.5
            trace.backtracks += 1
        if not accepted:
            break
        rel = (gamma - gamma_c) / max(gamma, np.finfo(float).tiny)
        lam, gamma, phi, inv_s = cand, gamma_c, phi_c, inv_s_c
        trace.gamma_history.append(gamma)
        trace.iterations = it
        step *= 2.0  # let the next search start optimistic
        stall = stall + 1 if rel < tol else 0
        if stall >= patience:
            trace.converged = True
            break
    trace.final_step = step
    return PatternSet(lam, "optimized", trace)


def baseline_patterns(kind: str, m: int, l: int, seed: int = 0) -> PatternSet:
    """Reference pattern families the optimizer is judged against.

    kinds: "hadamard" (first M rows of the Sylvester construction at the
    next power of two >= L, truncated to L columns), "bernoulli" (iid
    signs), "gaussian" (iid normals scaled into the box by the max
    magnitude), "all_ones" (uniform illumination, no multiplexing).
    """
    if m < 1 or l < 1:
        raise ValueError("pattern dimensions must be positive")
    if kind == "hadamard":
        order = 1
        while order < l:
            order *= 2
        if m > order:
            raise ValueError(f"only {order} distinct rows exist at this size, asked for {m}")
        h = scipy.linalg.hadamard(order).astype(np.float64)
        return PatternSet(h[:m, :l], "hadamard")
    rng = np.random.default_rng(seed)
    if kind == "bernoulli":
        return PatternSet(rng.choice([-1.0, 1.0], size=(m, l)), "bernoulli")
    if kind == "gaussian":
        v = rng.standard_normal((m, l))
        return PatternSet(v / np.max(np.abs(v)), "gaussian")
    if kind == "all_ones":
        return PatternSet(np.ones((m, l)), "all_ones")
    raise ValueError(f"unknown pattern kind {kind!r}")
