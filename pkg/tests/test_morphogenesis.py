import dataclasses

import numpy as np
import pytest

from matevo.dsl import parse_response
from matevo.evolution import evolution_fibre, evolution_fibre_at_x
from matevo.morphogenesis import (GRID, MORPHOGENESIS, NO_MORPHOGENESIS, STENCIL, UNDETERMINED,
                                  MorphogenesisFibre, NoDerivativeError, classify_morphogenesis,
                                  morphogenesis_constraints, morphogenesis_fibre,
                                  morphogenesis_fibre_at_x, symmetry_frame_field)
from matevo.numkernel import nullspace, principal_angles, span_residual
from matevo.symmetry import dimension_profile
from oracles import e3_rotation, skew_basis

TS = np.linspace(-1, 1, 41)
X0 = (0.0, 0.0, 0.0)

# so(3) conjugated by the time-dependent shear S(t) = I + t e1 e3^T, plus a
# time-dependent volumetric channel: constant symmetry type, frames rotate
C = "matmul(transpose(F), F)"
C11 = f"quad(vec(1, 0, 0), {C})"
C13 = "(F11*F13 + F21*F23 + F31*F33)"
SHEARED = f"tr({C}) + 2*t*{C13} + t^2*{C11}; exp(t)*det(F)"


def _fibres(model, samples, ts=TS, x=X0, derivative=STENCIL, body=False):
    profile = dimension_profile(model, ts, x, samples)
    fields = symmetry_frame_field(model, ts, x, samples, profile=profile, derivative=derivative, body=body)
    out = [None] * len(ts)
    for f in fields:
        for i in range(f.segment.start, f.segment.stop):
            try:
                fn = morphogenesis_fibre if body else morphogenesis_fibre_at_x
                out[i] = fn(model, f, i, samples)
            except NoDerivativeError:
                pass
    return profile, fields, out


def _so3_plus_identity():
    return np.hstack([skew_basis(), np.eye(3).ravel()[:, None]])


def test_frame_field_b(samples, scenario):
    fields = symmetry_frame_field(scenario("B"), TS, X0, samples)
    assert len(fields) == 1 and fields[0].dim == 3
    f = fields[0]
    assert np.max(np.abs(f.d_t)) <= 1e-8
    for i in range(len(TS)):
        assert np.max(principal_angles(f.frames[i], skew_basis())) < 1e-6
    assert np.max(np.abs(f.frames - f.frames[0])) <= 1e-8


def test_frame_field_c_positive_times(samples, scenario):
    ts = np.linspace(0.1, 1, 19)
    fields = symmetry_frame_field(scenario("C"), ts, X0, samples)
    assert len(fields) == 1 and fields[0].dim == 1
    f = fields[0]
    np.testing.assert_allclose(np.abs(f.frames[:, :, 0]), np.abs(np.broadcast_to(e3_rotation()[:, 0], (19, 9))),
                               atol=1e-8)
    assert np.max(np.abs(f.d_t)) <= 1e-6


def test_frame_field_a_empty(samples, scenario):
    fields = symmetry_frame_field(scenario("A"), TS, X0, samples, body=True)
    assert len(fields) == 1 and fields[0].frames.shape == (41, 9, 0)


def test_scenario_b_at_x(samples, scenario):
    profile, _, fibres = _fibres(scenario("B"), samples)
    for f in fibres:
        assert (f.dim, f.base_dim) == (5, 1)
        lam_dir = np.zeros((10, 1))
        lam_dir[0] = 1
        expected = np.hstack([lam_dir, np.vstack([np.zeros((1, 4)), _so3_plus_identity()])])
        assert np.max(principal_angles(f.basis.basis, expected)) < 1e-5
    assert classify_morphogenesis(profile, fibres).verdict == NO_MORPHOGENESIS


def test_scenario_a_vacuous(samples, scenario):
    profile, _, fibres = _fibres(scenario("A"), samples)
    for f in fibres:
        assert (f.dim, f.base_dim) == (10, 1)
        np.testing.assert_array_equal(f.basis.basis, np.eye(10))
    _, _, body = _fibres(scenario("A"), samples, body=True)
    for f in body:
        assert (f.dim, f.base_dim) == (13, 4)
        np.testing.assert_array_equal(f.basis.basis, np.eye(13))


def test_scenario_c(samples, scenario):
    profile, _, fibres = _fibres(scenario("C"), samples)
    assert fibres[20] is None
    assert all(f.base_dim == 1 for i, f in enumerate(fibres) if i != 20)
    v = classify_morphogenesis(profile, fibres)
    assert v.verdict == MORPHOGENESIS
    assert any("t=0.0" in r for r in v.reasons)
    ts = np.linspace(0.1, 1, 19)
    profile, _, fibres = _fibres(scenario("C"), samples, ts=ts)
    assert all(f.base_dim == 1 for f in fibres)
    assert classify_morphogenesis(profile, fibres).verdict == NO_MORPHOGENESIS


def test_jump_node_has_no_derivatives(samples, scenario):
    fields = symmetry_frame_field(scenario("C"), TS, X0, samples)
    jump = [f for f in fields if f.segment.start == 20][0]
    assert not jump.has_derivatives
    with pytest.raises(NoDerivativeError):
        morphogenesis_fibre_at_x(scenario("C"), jump, 20, samples)
    with pytest.raises(IndexError):
        morphogenesis_fibre_at_x(scenario("C"), jump, 3, samples)


def test_scenario_d(samples, scenario):
    profile, _, fibres = _fibres(scenario("D"), samples)
    assert all((f.dim, f.base_dim) == (5, 1) for f in fibres)
    assert classify_morphogenesis(profile, fibres).verdict == NO_MORPHOGENESIS


def test_body_fibres(samples, scenario):
    _, _, body = _fibres(scenario("B"), samples, body=True)
    assert all((f.dim, f.base_dim) == (8, 4) for f in body)
    _, _, body = _fibres(scenario("E"), samples, ts=np.linspace(-1, 1, 9), x=(0.3, 0, 0), body=True)
    assert all(f.base_dim >= 1 for f in body)


def test_frame_derivative_modes(samples):
    model = parse_response(SHEARED)
    ts = np.linspace(-1, 1, 21)
    profile, _, stencil = _fibres(model, samples, ts=ts)
    assert set(profile.dims) == {3}
    assert all((f.dim, f.base_dim) == (5, 1) for f in stencil)
    assert classify_morphogenesis(profile, stencil).verdict == NO_MORPHOGENESIS
    # second-order grid differences leak truncation error into the lambda column
    _, _, grid = _fibres(model, samples, ts=ts, derivative=GRID)
    assert any(f.base_dim == 0 for f in grid)
    # both modes agree on the acceptance scenarios
    for name in "BD":
        from matevo.scenarios import builtin_scenario
        _, _, a = _fibres(builtin_scenario(name), samples, derivative=GRID)
        assert all(f.base_dim == 1 for f in a)


def test_bad_derivative_mode(samples, scenario):
    with pytest.raises(ValueError):
        symmetry_frame_field(scenario("B"), TS, X0, samples, derivative="spline")


def _rotation(axis, angle):
    k = np.asarray(axis, float) / np.linalg.norm(axis)
    K = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K, K


@pytest.mark.parametrize("name", ["B", "D"])
@pytest.mark.parametrize("omega", [0.0, 0.3])
def test_gauge_invariance(samples, scenario, name, omega):
    m = scenario(name)
    field = symmetry_frame_field(m, TS, X0, samples)[0]
    Q0 = np.linalg.qr(np.random.default_rng(5).normal(size=(3, 3)))[0]
    frames, d_t = [], []
    for i, t in enumerate(TS):
        R, K = _rotation((1, 2, 3), omega * t)
        Q = Q0 @ R
        dQ = Q0 @ R @ (omega * K)
        frames.append(field.frames[i] @ Q)
        d_t.append(field.d_t[i] @ Q + field.frames[i] @ dQ)
    moved = dataclasses.replace(field, frames=np.array(frames), d_t=np.array(d_t))
    for i in range(0, 41, 5):
        a = morphogenesis_fibre_at_x(m, field, i, samples)
        b = morphogenesis_fibre_at_x(m, moved, i, samples)
        assert (a.dim, a.base_dim) == (b.dim, b.base_dim)
        assert np.max(principal_angles(a.basis.basis, b.basis.basis)) < 1e-6


@pytest.mark.parametrize("name", list("ABCDE"))
def test_inclusion(samples, scenario, name):
    m = scenario(name)
    x = (0.3, 0.0, 0.0)
    ts = np.linspace(-1, 1, 21)
    _, _, at_x = _fibres(m, samples, ts=ts, x=x)
    _, _, body = _fibres(m, samples, ts=ts, x=x, body=True)
    for i, t in enumerate(ts):
        if at_x[i] is not None:
            e = evolution_fibre_at_x(m, t, x, samples)
            assert span_residual(e.basis.basis, at_x[i].basis.basis) <= 1e-6
        if body[i] is not None:
            e = evolution_fibre(m, t, x, samples)
            assert span_residual(e.basis.basis, body[i].basis.basis) <= 1e-6


def test_constraints_shape(samples, scenario):
    from matevo.jets import linearize
    lin = linearize(scenario("B"), 0.2, X0, samples)
    L = skew_basis()
    cm = morphogenesis_constraints(lin, L, np.zeros_like(L))
    assert cm.entries.shape == (40 * 2 * 3, 10)
    cm = morphogenesis_constraints(lin, L, np.zeros_like(L), np.zeros((9, 3, 3)))
    assert cm.entries.shape == (40 * 2 * 3, 13)
    assert morphogenesis_constraints(lin, np.zeros((9, 0)), np.zeros((9, 0))).entries.shape == (0, 10)


def _fake(base):
    return MorphogenesisFibre(0.0, X0, nullspace(np.zeros((1, 10))), base)


def test_classify_rules(samples, scenario):
    ts = np.linspace(0, 1, 2)
    profile = dimension_profile(scenario("B"), ts, X0, samples)
    assert classify_morphogenesis(profile, [_fake(1), _fake(1)]).verdict == NO_MORPHOGENESIS
    assert classify_morphogenesis(profile, [_fake(1), _fake(0)]).verdict == MORPHOGENESIS
    v = classify_morphogenesis(profile, [_fake(1), None])
    assert v.verdict == UNDETERMINED and v.warnings
    with pytest.raises(ValueError):
        classify_morphogenesis(profile, [_fake(1)])


def test_short_grid_is_undetermined(samples, scenario):
    profile, fields, fibres = _fibres(scenario("B"), samples, ts=np.array([0.0, 1.0]))
    assert fibres == [None, None]
    assert classify_morphogenesis(profile, fibres).verdict == UNDETERMINED
