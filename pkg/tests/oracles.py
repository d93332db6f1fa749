"""Independent reference implementations used as test oracles.

Nothing here goes through the expression parser or the jet evaluator: the
built-in responses are re-coded with numpy, derivatives come from central
differences, and the analytic symmetry spans are written out by hand.
"""

from __future__ import annotations

import numpy as np


def _c(F):
    return F.T @ F


REFERENCE = {
    "A": lambda t, x, F: F.ravel().copy(),
    "B": lambda t, x, F: np.array([np.trace(_c(F)), t * np.linalg.det(F)]),
    "C": lambda t, x, F: np.array([np.trace(_c(F)), t * _c(F)[2, 2]]),
    "D": lambda t, x, F: np.array([np.exp(2 * t) * np.trace(_c(F))]),
    "E": lambda t, x, F: np.array([(1 + x[0] ** 2) * np.trace(_c(F))]),
}


def fd_gradient(fn, t, x, F, h=1e-5):
    """Central differences of fn(t, x, F) in the 13 arguments (t, x1..x3, F11..F33)."""
    z = np.concatenate([[t], x, F.ravel()])

    def f(v):
        return fn(v[0], v[1:4], v[4:].reshape(3, 3))

    cols = []
    for i in range(13):
        e = np.zeros(13)
        e[i] = h
        cols.append((f(z + e) - f(z - e)) / (2 * h))
    return np.stack(cols, axis=-1)  # (m, 13)


def skew_basis() -> np.ndarray:
    """so(3) as three flattened 3x3 matrices (columns)."""
    out = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        L = np.zeros((3, 3))
        L[i, j], L[j, i] = 1.0, -1.0
        out.append(L.ravel())
    return np.stack(out, axis=1)


def trace_free_basis() -> np.ndarray:
    out = []
    for i in range(3):
        for j in range(3):
            if i != j:
                L = np.zeros((3, 3))
                L[i, j] = 1.0
                out.append(L.ravel())
    out.append(np.diag([1.0, -1.0, 0.0]).ravel())
    out.append(np.diag([0.0, 1.0, -1.0]).ravel())
    return np.stack(out, axis=1)


def e3_rotation() -> np.ndarray:
    L = np.zeros((3, 3))
    L[0, 1], L[1, 0] = 1.0, -1.0
    return L.ravel()[:, None] / np.sqrt(2)


def brute_conjugation_closed(G, H) -> bool:
    """Normality straight from the definition, by enumerating every (g, h)."""
    for g in range(len(G.arrows)):
        for h in H.arrows:
            if G.src[h] == G.tgt[h] == G.src[g]:
                gh = G.table[(g, h)]
                c = G.table[(gh, G.inverse[g])]
                if c not in H.arrows:
                    return False
    return True


def arrow_label(G, g) -> str:
    """Group element label of an arrow of a trivial groupoid (ids ``x>y:a``)."""
    return G.arrows[g].id.split(":", 1)[1]


def group_normalizer(group, sub) -> set[int]:
    """{g : g sub g^-1 == sub}, enumerated from the multiplication table."""
    sub = set(sub)
    T, inv = group.table, group.inverse
    return {g for g in range(group.order) if {T[T[g][h]][inv[g]] for h in sub} == sub}


def group_is_normal(group, sub) -> bool:
    return group_normalizer(group, sub) == set(range(group.order))
