"""Forward-mode evaluation of response models.

Every intermediate value carries its derivative along all 13 canonical
directions ``(t, x1, x2, x3, F11, F12, ..., F33)`` in a trailing axis, and a
leading axis batches evaluation points, so one tree walk yields exact
first derivatives for a whole set of sampled deformations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .dsl import Binary, Call, Num, ResponseModel, Unary, Var, free_variables

N_DIRS = 13
T_SLOT = 0
X_SLOTS = slice(1, 4)
F_SLOTS = slice(4, 13)


class EvaluationError(ArithmeticError):
    """Division by zero or a domain error inside a model expression."""


class _Jet(NamedTuple):
    val: np.ndarray  # (N,) + shape
    der: np.ndarray  # (N,) + shape + (13,)


@dataclass(frozen=True)
class EvalPoint:
    t: float
    x: tuple[float, float, float]
    F: np.ndarray


@dataclass(frozen=True)
class ResponseJet:
    value: np.ndarray  # (m,)
    d_t: np.ndarray  # (m,)
    d_x: np.ndarray  # (m, 3)
    d_F: np.ndarray  # (m, 9), F11, F12, ..., F33


@dataclass(frozen=True)
class Linearization:
    """First-order data of W on a batch of deformations at one (t, x).

    ``G[k, c] = F_k^T dW_c/dF (F_k)`` so that the directional derivative of
    W_c along ``F -> F (I + s L)`` is ``<L, G[k, c]>`` (Frobenius).
    """

    value: np.ndarray  # (K, m)
    d_t: np.ndarray  # (K, m)
    d_x: np.ndarray  # (K, m, 3)
    G: np.ndarray  # (K, m, 3, 3)


def _scalar_times(s: _Jet, y: _Jet) -> _Jet:
    k = y.val.ndim - 1
    n = s.val.shape[0]
    sv = s.val.reshape((n,) + (1,) * k)
    sd = s.der.reshape((n,) + (1,) * k + (N_DIRS,))
    return _Jet(sv * y.val, sd * y.val[..., None] + sv[..., None] * y.der)


def _divide(y: _Jet, s: _Jet) -> _Jet:
    if np.any(s.val == 0):
        raise EvaluationError("division by zero")
    k = y.val.ndim - 1
    n = s.val.shape[0]
    sv = s.val.reshape((n,) + (1,) * k)
    sd = s.der.reshape((n,) + (1,) * k + (N_DIRS,))
    q = y.val / sv
    return _Jet(q, (y.der - q[..., None] * sd) / sv[..., None])


def _power(a: _Jet, b: _Jet, b_node) -> _Jet:
    if not free_variables(b_node):
        p = float(b.val[0])
        if p == 0:
            return _Jet(np.ones_like(a.val), np.zeros_like(a.der))
        if p != int(p) and np.any(a.val < 0):
            raise EvaluationError("negative base with non-integer exponent")
        if p < 1 and np.any(a.val == 0):
            raise EvaluationError("zero base with exponent below 1")
        return _Jet(a.val ** p, (p * a.val ** (p - 1))[:, None] * a.der)
    if np.any(a.val <= 0):
        raise EvaluationError("non-positive base with variable exponent")
    val = a.val ** b.val
    log_a = np.log(a.val)
    der = val[:, None] * (b.val[:, None] * a.der / a.val[:, None] + log_a[:, None] * b.der)
    return _Jet(val, der)


def _cofactor(M: np.ndarray) -> np.ndarray:
    r0, r1, r2 = M[:, 0], M[:, 1], M[:, 2]
    return np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], axis=1)


def _call(name: str, args: Sequence[_Jet]) -> _Jet:
    if name == "exp":
        (a,) = args
        v = np.exp(a.val)
        return _Jet(v, v[:, None] * a.der)
    if name == "sin":
        (a,) = args
        return _Jet(np.sin(a.val), np.cos(a.val)[:, None] * a.der)
    if name == "cos":
        (a,) = args
        return _Jet(np.cos(a.val), -np.sin(a.val)[:, None] * a.der)
    if name == "sqrt":
        (a,) = args
        if np.any(a.val <= 0):
            raise EvaluationError("sqrt of a non-positive value")
        v = np.sqrt(a.val)
        return _Jet(v, a.der / (2 * v)[:, None])
    if name == "log":
        (a,) = args
        if np.any(a.val <= 0):
            raise EvaluationError("log of a non-positive value")
        return _Jet(np.log(a.val), a.der / a.val[:, None])
    if name == "tr":
        (a,) = args
        return _Jet(np.einsum("nii->n", a.val), np.einsum("niid->nd", a.der))
    if name == "transpose":
        (a,) = args
        return _Jet(a.val.swapaxes(1, 2), a.der.swapaxes(1, 2))
    if name == "det":
        (a,) = args
        cof = _cofactor(a.val)
        return _Jet(np.einsum("nj,nj->n", a.val[:, 0], cof[:, 0]),
                    np.einsum("nij,nijd->nd", cof, a.der))
    if name == "matmul":
        a, b = args
        if b.val.ndim == 3:
            return _Jet(np.einsum("nij,njk->nik", a.val, b.val),
                        np.einsum("nijd,njk->nikd", a.der, b.val)
                        + np.einsum("nij,njkd->nikd", a.val, b.der))
        return _Jet(np.einsum("nij,nj->ni", a.val, b.val),
                    np.einsum("nijd,nj->nid", a.der, b.val)
                    + np.einsum("nij,njd->nid", a.val, b.der))
    if name == "quad":
        v, M = args
        return _Jet(np.einsum("ni,nij,nj->n", v.val, M.val, v.val),
                    np.einsum("nid,nij,nj->nd", v.der, M.val, v.val)
                    + np.einsum("ni,nijd,nj->nd", v.val, M.der, v.val)
                    + np.einsum("ni,nij,njd->nd", v.val, M.val, v.der))
    if name == "vec":
        return _Jet(np.stack([a.val for a in args], axis=1),
                    np.stack([a.der for a in args], axis=1))
    raise ValueError(f"unknown function {name!r}")


class _Evaluator:
    def __init__(self, t: np.ndarray, x: np.ndarray, Fs: np.ndarray):
        self.n = Fs.shape[0]
        self.t, self.x, self.Fs = t, x, Fs

    def const(self, v: float) -> _Jet:
        return _Jet(np.full(self.n, v, dtype=float), np.zeros((self.n, N_DIRS)))

    def var(self, name: str) -> _Jet:
        n = self.n
        if name == "F":
            der = np.zeros((n, 3, 3, N_DIRS))
            for i in range(3):
                for j in range(3):
                    der[:, i, j, 4 + 3 * i + j] = 1.0
            return _Jet(self.Fs.copy(), der)
        if name == "I":
            return _Jet(np.broadcast_to(np.eye(3), (n, 3, 3)).copy(), np.zeros((n, 3, 3, N_DIRS)))
        der = np.zeros((n, N_DIRS))
        if name == "t":
            der[:, T_SLOT] = 1.0
            return _Jet(np.broadcast_to(self.t, (n,)).astype(float), der)
        if name[0] == "x":
            k = int(name[1]) - 1
            der[:, 1 + k] = 1.0
            return _Jet(np.broadcast_to(self.x[..., k], (n,)).astype(float), der)
        i, j = int(name[1]) - 1, int(name[2]) - 1
        der[:, 4 + 3 * i + j] = 1.0
        return _Jet(self.Fs[:, i, j].copy(), der)

    def eval(self, node) -> _Jet:
        if isinstance(node, Num):
            return self.const(node.value)
        if isinstance(node, Var):
            return self.var(node.name)
        if isinstance(node, Unary):
            a = self.eval(node.arg)
            return _Jet(-a.val, -a.der)
        if isinstance(node, Binary):
            a, b = self.eval(node.left), self.eval(node.right)
            op = node.op
            if op == "+":
                return _Jet(a.val + b.val, a.der + b.der)
            if op == "-":
                return _Jet(a.val - b.val, a.der - b.der)
            if op == "*":
                return _scalar_times(a, b) if node.left.kind == "scalar" else _scalar_times(b, a)
            if op == "/":
                return _divide(a, b)
            return _power(a, b, node.right)
        if isinstance(node, Call):
            return _call(node.name, [self.eval(a) for a in node.args])
        raise TypeError(f"not an expression node: {node!r}")


def eval_jets(model: ResponseModel, t, x, Fs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate all components on a batch.

    ``t`` is a scalar or (N,), ``x`` a 3-vector or (N, 3), ``Fs`` (N, 3, 3).
    Returns values (N, m) and gradients (N, m, 13).
    """
    Fs = np.asarray(Fs, dtype=float)
    if Fs.ndim == 2:
        Fs = Fs[None]
    ev = _Evaluator(np.asarray(t, dtype=float), np.asarray(x, dtype=float), Fs)
    vals, ders = [], []
    with np.errstate(all="ignore"):
        for comp in model.components:
            j = ev.eval(comp)
            vals.append(j.val)
            ders.append(j.der)
    values = np.stack(vals, axis=1)
    grads = np.stack(ders, axis=1)
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(grads))):
        raise EvaluationError("non-finite value or derivative")
    return values, grads


def eval_with_jet(model: ResponseModel, p: EvalPoint) -> ResponseJet:
    values, grads = eval_jets(model, p.t, p.x, np.asarray(p.F, dtype=float)[None])
    g = grads[0]
    return ResponseJet(values[0], g[:, T_SLOT], g[:, X_SLOTS], g[:, F_SLOTS])


def linearize(model: ResponseModel, t: float, x, samples: np.ndarray) -> Linearization:
    samples = np.asarray(samples, dtype=float)
    values, grads = eval_jets(model, t, x, samples)
    K, m = values.shape
    dF = grads[:, :, F_SLOTS].reshape(K, m, 3, 3)
    G = np.einsum("kil,kcij->kclj", samples, dF)
    return Linearization(values, grads[:, :, T_SLOT], grads[:, :, X_SLOTS], G)
