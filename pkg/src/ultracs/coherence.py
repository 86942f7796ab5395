"""Column-coherence measures for sensing operators.

Recovery guarantees in compressive sensing degrade as distinct scene
pixels become indistinguishable to the measurement operator, i.e. as
normalized columns align.  Two summaries are used here: the worst-case
pairwise inner product, and a Frobenius relaxation that averages the whole
off-diagonal Gram energy (the quantity the pattern optimizer descends).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_GRAM_BLOCK = 512  # columns per Gram block; bounds peak memory at L ~ 10^4


def normalize_columns(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Scale each column to unit l2 norm.

    Returns (normalized matrix, original norms).  Zero columns are left
    zero; callers that cannot tolerate them must check the returned norms.
    """
    a = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(a, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    return a / safe, norms


def mutual_coherence_max(matrix: np.ndarray) -> float:
    """Largest absolute inner product between distinct normalized columns."""
    q, norms = normalize_columns(matrix)
    if int(np.count_nonzero(norms)) < 2:
        raise ValueError("need at least two nonzero columns")
    keep = norms > 0
    q = q[:, keep]
    best = 0.0
    for start in range(0, q.shape[1], _GRAM_BLOCK):
        block = q[:, start : start + _GRAM_BLOCK]
        g = np.abs(block.T @ q)
        # mask the diagonal entries that fall inside this block
        idx = np.arange(block.shape[1])
        g[idx, start + idx] = 0.0
        best = max(best, float(g.max()))
    return best


def coherence_frobenius(matrix: np.ndarray) -> float:
    """Average off-diagonal Gram energy: ||I - Q~^T Q~||_F^2 / L.

    Q~ is the column-normalized operator.  Computed by accumulating the
    squared off-diagonal inner products (the normalized Gram diagonal is
    one wherever a column is nonzero); zero columns are excluded from the
    pairwise terms entirely, they only show up in the report.
    """
    q, norms = normalize_columns(matrix)
    n_cols = q.shape[1]
    if n_cols == 0:
        raise ValueError("matrix has no columns")
    total = 0.0
    for start in range(0, n_cols, _GRAM_BLOCK):
        block = q[:, start : start + _GRAM_BLOCK]
        g = block.T @ q
        total += float(np.sum(g * g))
    # subtracting the unit diagonal leaves exactly the off-diagonal energy
    n_nonzero = int(np.count_nonzero(norms))
    return (total - n_nonzero) / n_cols


@dataclass(frozen=True)
class CoherenceReport:
    """Coherence summary of one sensing operator, as a flat record."""

    mu_max: float
    mu_frob: float
    n_columns: int
    zero_columns: tuple[int, ...] = ()

    def to_text(self) -> str:
        dead = ",".join(str(i) for i in self.zero_columns)
        return (
            f"mu_max={self.mu_max:.12g}\n"
            f"mu_frob={self.mu_frob:.12g}\n"
            f"n_columns={self.n_columns}\n"
            f"zero_columns={dead}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "CoherenceReport":
        fields: dict[str, str] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            fields[key] = value
        dead = fields.get("zero_columns", "")
        return cls(
            mu_max=float(fields["mu_max"]),
            mu_frob=float(fields["mu_frob"]),
            n_columns=int(fields["n_columns"]),
            zero_columns=tuple(int(i) for i in dead.split(",") if i),
        )


def coherence_report(matrix: np.ndarray) -> CoherenceReport:
    """Both coherence measures plus the dead-column diagnosis for one operator."""
    a = np.asarray(matrix, dtype=np.float64)
    _, norms = normalize_columns(a)
    return CoherenceReport(
        mu_max=mutual_coherence_max(a),
        mu_frob=coherence_frobenius(a),
        n_columns=a.shape[1],
        zero_columns=tuple(int(i) for i in np.flatnonzero(norms == 0)),
    )
