"""Infinitesimal material symmetries at a point-instant.

A matrix L is an infinitesimal symmetry of W at (t, x) when
``sum_i F[i,l] L[l,j] dW/dF[i,j] = 0`` for every deformation F, i.e. when W
does not change to first order along ``F -> F (I + s L)``.  Sampling F turns
this into a linear system over the nine entries of L (row-major).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dsl import ResponseModel
from .jets import Linearization, linearize
from .numkernel import DEFAULT_REL_TOL, ConstraintMatrix, NullspaceBasis, nullspace

MIN_SEGMENT = 3


@dataclass(frozen=True)
class SymmetryAlgebra:
    t: float
    x: tuple[float, float, float]
    basis: NullspaceBasis

    @property
    def dim(self) -> int:
        return self.basis.dim

    def matrices(self) -> np.ndarray:
        """Basis elements as an array of shape (dim, 3, 3)."""
        return self.basis.basis.T.reshape(-1, 3, 3)


def _tags(K: int, m: int, d: int = 0) -> np.ndarray:
    if d == 0:
        k, c = np.meshgrid(np.arange(K), np.arange(m), indexing="ij")
        return np.stack([k.ravel(), c.ravel(), np.full(K * m, -1)], axis=1)
    k, c, b = np.meshgrid(np.arange(K), np.arange(m), np.arange(d), indexing="ij")
    return np.stack([k.ravel(), c.ravel(), b.ravel()], axis=1)


def symmetry_constraints(lin: Linearization) -> ConstraintMatrix:
    K, m = lin.G.shape[:2]
    return ConstraintMatrix(lin.G.reshape(K * m, 9), _tags(K, m))


def symmetry_from_linearization(lin: Linearization, t: float, x, rel_tol: float = DEFAULT_REL_TOL
                                ) -> SymmetryAlgebra:
    return SymmetryAlgebra(float(t), tuple(float(v) for v in x),
                           nullspace(symmetry_constraints(lin), rel_tol))


def symmetry_algebra(model: ResponseModel, t: float, x, samples: np.ndarray,
                     rel_tol: float = DEFAULT_REL_TOL) -> SymmetryAlgebra:
    """Basis of the symmetry Lie algebra of W at (t, x)."""
    return symmetry_from_linearization(linearize(model, t, x, samples), t, x, rel_tol)


def bracket_residual(alg: SymmetryAlgebra) -> float:
    """Largest distance of a commutator of basis elements from the span.

    Zero (to round-off) for a genuine Lie algebra.
    """
    L = alg.matrices()
    if len(L) < 2:
        return 0.0
    B = alg.basis.basis
    worst = 0.0
    for a in range(len(L)):
        for b in range(a + 1, len(L)):
            c = (L[a] @ L[b] - L[b] @ L[a]).ravel()
            r = c - B @ (B.T @ c)
            worst = max(worst, float(np.linalg.norm(r)))
    return worst


@dataclass(frozen=True)
class Segment:
    start: int
    stop: int  # exclusive
    dim: int

    def __len__(self) -> int:
        return self.stop - self.start


def segment_dims(dims: Sequence[int], min_length: int = MIN_SEGMENT):
    """Split a dimension sequence into maximal constant runs.

    Returns (segments, boundaries, jump_nodes): boundaries are index pairs
    (i, i+1) where the dimension changes, jump nodes are the nodes of runs
    shorter than ``min_length``.
    """
    segments = []
    start = 0
    for i in range(1, len(dims) + 1):
        if i == len(dims) or dims[i] != dims[start]:
            segments.append(Segment(start, i, int(dims[start])))
            start = i
    boundaries = [(s.stop - 1, s.stop) for s in segments[:-1]]
    jumps = [i for s in segments if len(s) < min_length for i in range(s.start, s.stop)]
    if len(segments) == 1:
        jumps = []
    return segments, boundaries, jumps


@dataclass(frozen=True)
class DimensionProfile:
    ts: np.ndarray
    x: tuple[float, float, float]
    dims: tuple[int, ...]
    segments: tuple[Segment, ...]
    boundaries: tuple[tuple[int, int], ...]
    jump_nodes: tuple[int, ...]
    algebras: tuple[SymmetryAlgebra, ...] = field(default=(), repr=False, compare=False)


def profile_from_algebras(ts, x, algebras: Sequence[SymmetryAlgebra],
                          min_length: int = MIN_SEGMENT) -> DimensionProfile:
    dims = tuple(a.dim for a in algebras)
    segments, boundaries, jumps = segment_dims(dims, min_length)
    return DimensionProfile(np.asarray(ts, dtype=float), tuple(float(v) for v in x), dims,
                            tuple(segments), tuple(boundaries), tuple(jumps), tuple(algebras))


def dimension_profile(model: ResponseModel, ts, x, samples: np.ndarray,
                      rel_tol: float = DEFAULT_REL_TOL, jobs: int = 1) -> DimensionProfile:
    """Symmetry dimension at every time node with x fixed."""
    ts = np.asarray(ts, dtype=float)
    if ts.size < 2:
        raise ValueError("a profile needs at least 2 grid nodes")

    def one(t):
        return symmetry_algebra(model, t, x, samples, rel_tol)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            algebras = list(pool.map(one, ts))
    else:
        algebras = [one(t) for t in ts]
    return profile_from_algebras(ts, x, algebras)
