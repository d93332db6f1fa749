"""Morphogenesis equations and the extended material distribution.

For every symmetry generator L (a basis of the symmetry algebra suffices)
the candidate ``(lambda, theta, Theta)`` must satisfy

    < Theta L - L Theta + theta_k dL/dx_k + lambda dL/dt , F^T dW/dF > = 0

for all sampled F.  At a fixed particle the theta_k terms are absent.  The
time and body derivatives of L come from a smoothly aligned frame field.
"""

from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dsl import ResponseModel
from .jets import Linearization, linearize
from .numkernel import (DEFAULT_REL_TOL, ConstraintMatrix, NullspaceBasis, align_basis,
                        canonical_basis, fd_derivative, nullspace, projected_rank)
from .symmetry import MIN_SEGMENT, DimensionProfile, Segment, dimension_profile, symmetry_algebra

NO_MORPHOGENESIS = "no-morphogenesis"
MORPHOGENESIS = "morphogenesis"
UNDETERMINED = "undetermined"

GRID = "grid"
STENCIL = "stencil"
STENCIL_STEP = 1e-5


class NoDerivativeError(ValueError):
    """The node has no frame derivatives (short segment or jump nearby)."""


@dataclass(frozen=True)
class SymmetryFrameField:
    segment: Segment
    x: tuple[float, float, float]
    ts: np.ndarray  # (n,)
    frames: np.ndarray  # (n, 9, d)
    d_t: np.ndarray | None  # (n, 9, d)
    d_x: np.ndarray | None  # (n, 9, d, 3)
    valid: np.ndarray  # (n,) bool: derivatives usable at this node

    @property
    def dim(self) -> int:
        return self.segment.dim

    @property
    def has_derivatives(self) -> bool:
        return self.d_t is not None

    def local(self, node: int) -> int:
        if not self.segment.start <= node < self.segment.stop:
            raise IndexError(f"node {node} outside segment {self.segment}")
        return node - self.segment.start


def _stencil_derivative(model, t, x, samples, rel_tol, center, direction, h):
    """Central difference of the symmetry frame along a (t, x) direction.

    Neighbour frames are Procrustes-aligned to ``center``; returns None if
    the symmetry dimension differs at a neighbour.
    """
    dt, dx = direction
    x = np.asarray(x, dtype=float)
    out = []
    for sign in (1.0, -1.0):
        alg = symmetry_algebra(model, t + sign * h * dt, x + sign * h * dx, samples, rel_tol)
        if alg.dim != center.shape[1]:
            return None
        out.append(align_basis(center, alg.basis.basis))
    return (out[0] - out[1]) / (2 * h)


def aligned_frames(profile: DimensionProfile) -> list[np.ndarray]:
    """Per segment, an (n, 9, d) array of frames: canonical at the first
    node, then Procrustes-aligned to the previous node."""
    out = []
    for seg in profile.segments:
        frames = np.empty((len(seg), 9, seg.dim))
        for i in range(len(seg)):
            B = profile.algebras[seg.start + i].basis.basis
            frames[i] = canonical_basis(B) if i == 0 else align_basis(frames[i - 1], B)
        out.append(frames)
    return out


def symmetry_frame_field(model: ResponseModel, ts, x, samples: np.ndarray,
                         rel_tol: float = DEFAULT_REL_TOL, profile: DimensionProfile | None = None,
                         derivative: str = STENCIL, body: bool = False,
                         h: float = STENCIL_STEP, min_length: int = MIN_SEGMENT,
                         pool: Executor | None = None) -> list[SymmetryFrameField]:
    """Aligned symmetry frames per constant-dimension segment of a time grid.

    Each segment starts from the canonical basis of its first node and is
    Procrustes-aligned left to right.  Time derivatives come from a local
    stencil of step ``h`` (default) or from the analysis grid itself
    (``derivative="grid"``, second order, so its truncation error can exceed
    ``rel_tol`` when frames change quickly); ``body=True`` adds stencil derivatives along
    x1, x2, x3.  Segments shorter than ``min_length`` carry no derivatives.
    Stencil evaluations are spread over ``pool`` when given.
    """
    if derivative not in (GRID, STENCIL):
        raise ValueError(f"unknown derivative mode {derivative!r}")
    ts = np.asarray(ts, dtype=float)
    if profile is None:
        profile = dimension_profile(model, ts, x, samples, rel_tol)
    x = tuple(float(v) for v in x)
    fields = []
    for seg, frames in zip(profile.segments, aligned_frames(profile)):
        n = len(seg)
        seg_ts = ts[seg.start:seg.stop]
        valid = np.zeros(n, dtype=bool)
        d_t = d_x = None
        if n >= min_length:
            valid[:] = True
            if derivative == GRID:
                steps = np.diff(seg_ts)
                if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                    raise ValueError("grid derivatives need a uniform time grid")
                d_t = fd_derivative(frames, steps[0])
            else:
                d_t = np.zeros_like(frames)
            if derivative == STENCIL or body:
                def node_derivs(i):
                    dirs = [(1.0, np.zeros(3))] if derivative == STENCIL else []
                    if body:
                        dirs += [(0.0, np.eye(3)[k]) for k in range(3)]
                    return [_stencil_derivative(model, seg_ts[i], x, samples, rel_tol,
                                                frames[i], dr, h) for dr in dirs]

                per_node = list(pool.map(node_derivs, range(n)) if pool else map(node_derivs, range(n)))
                if body:
                    d_x = np.zeros((n, 9, seg.dim, 3))
                for i, ds in enumerate(per_node):
                    if any(d is None for d in ds):
                        valid[i] = False
                        continue
                    if derivative == STENCIL:
                        d_t[i] = ds.pop(0)
                    for k, d in enumerate(ds):
                        d_x[i, :, :, k] = d
        fields.append(SymmetryFrameField(seg, x, seg_ts, frames, d_t, d_x, valid))
    return fields


@dataclass(frozen=True)
class MorphogenesisFibre:
    t: float
    x: tuple[float, float, float]
    basis: NullspaceBasis  # q = 10 at a particle, 13 for the body
    base_dim: int

    @property
    def dim(self) -> int:
        return self.basis.dim


def morphogenesis_constraints(lin: Linearization, frame: np.ndarray, d_t: np.ndarray,
                              d_x: np.ndarray | None = None) -> ConstraintMatrix:
    """Rows indexed (sample, component, frame element).

    ``frame`` and ``d_t`` are (9, d); ``d_x`` is (9, d, 3) or None for the
    particle-level equation.
    """
    K, m = lin.G.shape[:2]
    d = frame.shape[1]
    q = 10 if d_x is None else 13
    if d == 0:
        return ConstraintMatrix(np.zeros((0, q)), np.zeros((0, 3), dtype=int))
    G = lin.G
    L = frame.T.reshape(d, 3, 3)
    Lt = d_t.T.reshape(d, 3, 3)
    blocks = [np.einsum("kcij,bij->kcb", G, Lt)[..., None]]
    if d_x is not None:
        Lx = d_x.transpose(1, 2, 0).reshape(d, 3, 3, 3)  # [b, k, i, j]
        blocks.append(np.einsum("kcij,bqij->kcbq", G, Lx))
    theta = np.einsum("kcrj,bsj->kcbrs", G, L) - np.einsum("blr,kcls->kcbrs", L, G)
    blocks.append(theta.reshape(K, m, d, 9))
    rows = np.concatenate(blocks, axis=-1).reshape(K * m * d, q)
    k, c, b = np.meshgrid(np.arange(K), np.arange(m), np.arange(d), indexing="ij")
    return ConstraintMatrix(rows, np.stack([k.ravel(), c.ravel(), b.ravel()], axis=1))


def _frame_at(field: SymmetryFrameField, node: int, need_x: bool):
    i = field.local(node)
    if field.d_t is None or not field.valid[i]:
        raise NoDerivativeError(f"node {node} has no frame derivatives")
    if need_x and field.d_x is None:
        raise NoDerivativeError("frame field has no body derivatives")
    d_x = field.d_x[i] if need_x else None
    return field.ts[i], field.frames[i], field.d_t[i], d_x


def morphogenesis_fibre_at_x(model: ResponseModel, field: SymmetryFrameField, node: int,
                             samples: np.ndarray, rel_tol: float = DEFAULT_REL_TOL,
                             lin: Linearization | None = None) -> MorphogenesisFibre:
    """Fibre of the particle-level extended material distribution at a time node."""
    t, frame, d_t, _ = _frame_at(field, node, need_x=False)
    if lin is None:
        lin = linearize(model, t, field.x, samples)
    ns = nullspace(morphogenesis_constraints(lin, frame, d_t), rel_tol)
    return MorphogenesisFibre(float(t), field.x, ns, projected_rank(ns.basis, slice(0, 1), rel_tol))


def morphogenesis_fibre(model: ResponseModel, field: SymmetryFrameField, node: int,
                        samples: np.ndarray, rel_tol: float = DEFAULT_REL_TOL,
                        lin: Linearization | None = None) -> MorphogenesisFibre:
    """Fibre of the body extended material distribution at (t, x)."""
    t, frame, d_t, d_x = _frame_at(field, node, need_x=True)
    if lin is None:
        lin = linearize(model, t, field.x, samples)
    ns = nullspace(morphogenesis_constraints(lin, frame, d_t, d_x), rel_tol)
    return MorphogenesisFibre(float(t), field.x, ns, projected_rank(ns.basis, slice(0, 4), rel_tol))


@dataclass(frozen=True)
class MorphogenesisVerdict:
    verdict: str
    reasons: tuple[str, ...]
    warnings: tuple[str, ...] = ()


def classify_morphogenesis(profile: DimensionProfile,
                           fibres: Sequence[MorphogenesisFibre | None]) -> MorphogenesisVerdict:
    """Decide morphogenesis at one particle from its symmetry profile and fibres.

    ``fibres`` is aligned with the profile grid; None marks nodes where no
    fibre was computed (jump nodes, short segments).
    """
    if len(fibres) != len(profile.dims):
        raise ValueError("profile and fibres are on different grids")
    ts = profile.ts
    reasons = []
    if len(profile.segments) > 1:
        for left, right in profile.boundaries:
            reasons.append(f"symmetry dimension {profile.dims[left]} -> {profile.dims[right]} "
                           f"between t={float(ts[left])!r} and t={float(ts[right])!r}")
    broken = [i for i, f in enumerate(fibres) if f is not None and f.base_dim == 0]
    for i in broken:
        reasons.append(f"no solution with lambda != 0 at t={float(ts[i])!r}")
    if reasons:
        return MorphogenesisVerdict(MORPHOGENESIS, tuple(reasons))
    missing = [i for i, f in enumerate(fibres) if f is None]
    if missing:
        return MorphogenesisVerdict(
            UNDETERMINED, (),
            (f"constant symmetry dimension but no morphogenesis fibre at {len(missing)} node(s); "
             "equal-dimension non-conjugacy cannot be excluded",))
    return MorphogenesisVerdict(NO_MORPHOGENESIS, ("lambda != 0 solution at every node",))
