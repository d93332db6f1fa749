"""Built-in test materials and deterministic deformation sampling."""

from __future__ import annotations

import numpy as np

from .dsl import ModelError, ResponseModel, parse_response

SCENARIOS = {
    # every entry of F: no symmetry, no t or x dependence
    "A": "F11; F12; F13; F21; F22; F23; F31; F32; F33",
    # isotropic in time, second channel ages
    "B": "tr(matmul(transpose(F), F)); t*det(F)",
    # isotropy broken to rotations about e3 for t != 0
    "C": "tr(matmul(transpose(F), F)); t*quad(vec(0, 0, 1), matmul(transpose(F), F))",
    # stiffening at constant symmetry: remodeling with volume change
    "D": "exp(2*t)*tr(matmul(transpose(F), F))",
    # functionally graded along x1, time independent
    "E": "(1 + x1^2)*tr(matmul(transpose(F), F))",
}

DEFAULT_DET_FLOOR = 0.2


def builtin_scenario(name: str) -> ResponseModel:
    try:
        text = SCENARIOS[name]
    except KeyError:
        raise ModelError(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}") from None
    return parse_response(text, name=name)


def sample_deformations(seed: int, K: int, det_floor: float = DEFAULT_DET_FLOOR,
                        spread: float = 0.5) -> np.ndarray:
    """K matrices ``I + U`` with U uniform in [-spread, spread], |det| >= det_floor.

    Candidates below the floor are redrawn (at most 1000 times per sample);
    if that fails, U is halved until the floor is met, ending at I.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    rng = np.random.default_rng(seed)
    eye = np.eye(3)
    out = np.empty((K, 3, 3))
    for k in range(K):
        for _ in range(1000):
            U = rng.uniform(-spread, spread, size=(3, 3))
            if abs(np.linalg.det(eye + U)) >= det_floor:
                break
        else:
            for _ in range(60):
                U = 0.5 * U
                if abs(np.linalg.det(eye + U)) >= det_floor:
                    break
            else:
                U = np.zeros((3, 3))
        out[k] = eye + U
    return out
