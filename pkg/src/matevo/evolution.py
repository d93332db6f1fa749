"""Evolution equations: material distributions of the body-time manifold.

Unknowns of the full-body equation are ordered
``(lambda, theta_1, theta_2, theta_3, Theta_11, Theta_12, ..., Theta_33)``;
at a fixed particle the three body components drop out.  Fibres are computed
at identities only; left-invariance transports them elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dsl import ResponseModel
from .jets import Linearization, linearize
from .numkernel import DEFAULT_REL_TOL, ConstraintMatrix, NullspaceBasis, nullspace, projected_rank
from .symmetry import _tags

SMOOTH_REMODELING = "smooth-remodeling"
SMOOTH_AGING = "smooth-aging"
MIXED = "mixed"


@dataclass(frozen=True)
class EvolutionFibre:
    t: float
    x: tuple[float, float, float]
    basis: NullspaceBasis  # q = 13
    base_dim: int

    @property
    def dim(self) -> int:
        return self.basis.dim


@dataclass(frozen=True)
class XEvolutionFibre:
    t: float
    x: tuple[float, float, float]
    basis: NullspaceBasis  # q = 10
    base_dim: int

    @property
    def dim(self) -> int:
        return self.basis.dim


def evolution_constraints(lin: Linearization, at_x: bool = False) -> ConstraintMatrix:
    K, m = lin.G.shape[:2]
    blocks = [lin.d_t.reshape(K * m, 1)]
    if not at_x:
        blocks.append(lin.d_x.reshape(K * m, 3))
    blocks.append(lin.G.reshape(K * m, 9))
    return ConstraintMatrix(np.hstack(blocks), _tags(K, m))


def evolution_from_linearization(lin: Linearization, t, x, rel_tol=DEFAULT_REL_TOL) -> EvolutionFibre:
    ns = nullspace(evolution_constraints(lin), rel_tol)
    return EvolutionFibre(float(t), tuple(map(float, x)), ns,
                          projected_rank(ns.basis, slice(0, 4), rel_tol))


def x_evolution_from_linearization(lin: Linearization, t, x, rel_tol=DEFAULT_REL_TOL) -> XEvolutionFibre:
    ns = nullspace(evolution_constraints(lin, at_x=True), rel_tol)
    return XEvolutionFibre(float(t), tuple(map(float, x)), ns,
                           projected_rank(ns.basis, slice(0, 1), rel_tol))


def evolution_fibre(model: ResponseModel, t: float, x, samples: np.ndarray,
                    rel_tol: float = DEFAULT_REL_TOL) -> EvolutionFibre:
    """Solutions of ``lambda dW/dt + theta_i dW/dx_i + <Theta, F^T dW/dF> = 0``."""
    return evolution_from_linearization(linearize(model, t, x, samples), t, x, rel_tol)


def evolution_fibre_at_x(model: ResponseModel, t: float, x, samples: np.ndarray,
                         rel_tol: float = DEFAULT_REL_TOL) -> XEvolutionFibre:
    """Solutions of ``lambda dW/dt + <Theta, F^T dW/dF> = 0`` at a fixed particle."""
    return x_evolution_from_linearization(linearize(model, t, x, samples), t, x, rel_tol)


@dataclass(frozen=True)
class EvolutionVerdict:
    verdict: str
    remodeling: tuple[bool, ...]  # per node: base_dim == 1


def classify_evolution(fibres: Sequence[XEvolutionFibre]) -> EvolutionVerdict:
    if not fibres:
        raise ValueError("empty profile")
    flags = tuple(f.base_dim == 1 for f in fibres)
    if all(flags):
        verdict = SMOOTH_REMODELING
    elif not any(flags):
        verdict = SMOOTH_AGING
    else:
        verdict = MIXED
    return EvolutionVerdict(verdict, flags)
