"""Small dense linear algebra: thresholded nullspaces, frame alignment, finite differences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_REL_TOL = 1e-8


class DimensionMismatch(ValueError):
    """Two bases that should be aligned have different dimensions."""


@dataclass(frozen=True)
class ConstraintMatrix:
    entries: np.ndarray  # (p, q)
    tags: np.ndarray  # (p, 3): sample, component, frame element (-1 if unused)

    @classmethod
    def untagged(cls, entries) -> "ConstraintMatrix":
        entries = np.atleast_2d(np.asarray(entries, dtype=float))
        return cls(entries, np.full((entries.shape[0], 3), -1, dtype=int))


@dataclass(frozen=True)
class NullspaceBasis:
    basis: np.ndarray  # (q, d), orthonormal columns
    singular_values: np.ndarray
    threshold: float

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def q(self) -> int:
        return self.basis.shape[0]

    def margin(self) -> tuple[float, float]:
        """(largest discarded, smallest kept) singular value over sigma_max.

        A wide gap between the two means the rank decision is robust.
        """
        s = self.singular_values
        if s.size == 0 or s[0] == 0:
            return 0.0, float("nan")
        rank = self.q - self.dim
        rel = s / s[0]
        dropped = float(rel[rank]) if rank < rel.size else 0.0
        kept = float(rel[rank - 1]) if rank > 0 else float("nan")
        return dropped, kept


def nullspace(M, rel_tol: float = DEFAULT_REL_TOL) -> NullspaceBasis:
    """Right nullspace of M: singular values <= rel_tol * sigma_max count as zero."""
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    A = M.entries if isinstance(M, ConstraintMatrix) else np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(A)):
        raise ValueError("constraint matrix has non-finite entries")
    q = A.shape[1]
    if A.shape[0] == 0:
        return NullspaceBasis(np.eye(q), np.zeros(0), 0.0)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0:
        return NullspaceBasis(np.eye(q), s, 0.0)
    tol = rel_tol * smax
    rank = int(np.count_nonzero(s > tol))
    return NullspaceBasis(vh[rank:].T.copy(), s, tol)


def projected_rank(basis: np.ndarray, rows, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Rank of the selected coordinate rows of an orthonormal basis.

    The basis has unit scale, so singular values are compared to rel_tol
    directly.
    """
    block = np.asarray(basis)[rows]
    if block.size == 0:
        return 0
    block = np.atleast_2d(block)
    s = np.linalg.svd(block, compute_uv=False)
    return int(np.count_nonzero(s > rel_tol))


def align_basis(prev: NullspaceBasis | np.ndarray, cur: NullspaceBasis | np.ndarray):
    """Rotate ``cur`` within its span to best match ``prev`` (orthogonal Procrustes).

    Returns the same type as ``cur``.
    """
    P = prev.basis if isinstance(prev, NullspaceBasis) else np.asarray(prev)
    C = cur.basis if isinstance(cur, NullspaceBasis) else np.asarray(cur)
    if P.shape != C.shape:
        raise DimensionMismatch(f"cannot align bases of shape {C.shape} to {P.shape}")
    if C.shape[1] == 0:
        return cur
    u, _, vt = np.linalg.svd(C.T @ P)
    aligned = C @ (u @ vt)
    if isinstance(cur, NullspaceBasis):
        return NullspaceBasis(aligned, cur.singular_values, cur.threshold)
    return aligned


def fd_derivative(field, h: float) -> np.ndarray:
    """Derivative of a uniformly sampled matrix field along its first axis.

    Central differences inside, second-order one-sided differences at both
    ends.
    """
    f = np.asarray(field, dtype=float)
    if f.shape[0] < 3:
        raise ValueError("finite differences need at least 3 nodes")
    d = np.empty_like(f)
    d[1:-1] = (f[2:] - f[:-2]) / (2 * h)
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h)
    d[-1] = (3 * f[-1] - 4 * f[-2] + f[-3]) / (2 * h)
    return d


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between the column spans of A and B.

    Small angles come from sines, large ones from cosines, so both ends are
    accurate to round-off.
    """
    qa, _ = np.linalg.qr(np.atleast_2d(A))
    qb, _ = np.linalg.qr(np.atleast_2d(B))
    if qa.shape[1] < qb.shape[1]:
        qa, qb = qb, qa
    k = qb.shape[1]
    if k == 0:
        return np.zeros(0)
    cos = np.sort(np.linalg.svd(qa.T @ qb, compute_uv=False))[::-1][:k]
    sin = np.sort(np.linalg.svd(qb - qa @ (qa.T @ qb), compute_uv=False))[:k]
    small = cos > np.sqrt(0.5)
    return np.where(small, np.arcsin(np.clip(sin, 0, 1)), np.arccos(np.clip(cos, -1, 1)))


def canonical_basis(basis: np.ndarray, pick: float = 0.25) -> np.ndarray:
    """Orthonormal basis of span(basis) that depends only on the span.

    Gram-Schmidt on the orthogonal projector's columns in coordinate order,
    skipping columns whose remaining norm is below ``pick``.  A d-dimensional
    projector on R^q always has a remaining column of norm >= sqrt(1/q), so
    ``pick`` = 0.25 never stalls for q <= 13.
    """
    B = np.asarray(basis, dtype=float)
    q, d = B.shape
    if d == 0:
        return B.copy()
    P = B @ B.T
    chosen: list[np.ndarray] = []
    for j in range(q):
        v = P[:, j].copy()
        for _ in range(2):
            for c in chosen:
                v -= (c @ v) * c
        n = np.linalg.norm(v)
        if n > pick:
            chosen.append(v / n)
            if len(chosen) == d:
                break
    if len(chosen) < d:
        raise ArithmeticError("canonical basis selection stalled")
    return np.stack(chosen, axis=1)


def span_residual(vectors: np.ndarray, basis: np.ndarray) -> float:
    """Largest norm of a column of ``vectors`` after removing its part in span(basis)."""
    V = np.atleast_2d(vectors)
    if V.shape[1] == 0:
        return 0.0
    if basis.shape[1] == 0:
        return float(np.max(np.linalg.norm(V, axis=0)))
    Q, _ = np.linalg.qr(basis)
    R = V - Q @ (Q.T @ V)
    return float(np.max(np.linalg.norm(R, axis=0)))
