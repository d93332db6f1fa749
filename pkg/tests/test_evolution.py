import numpy as np
import pytest

from matevo.evolution import (MIXED, SMOOTH_AGING, SMOOTH_REMODELING, XEvolutionFibre,
                              classify_evolution, evolution_constraints, evolution_fibre,
                              evolution_fibre_at_x)
from matevo.jets import linearize
from matevo.numkernel import nullspace, principal_angles, span_residual
from matevo.scenarios import sample_deformations
from matevo.symmetry import symmetry_algebra
from oracles import skew_basis

TS = np.linspace(-1, 1, 41)
X0 = (0.0, 0.0, 0.0)


def _embed_x(theta_cols, lam=None):
    """Columns (lambda, Theta) from flattened Theta columns."""
    lam = np.zeros(theta_cols.shape[1]) if lam is None else lam
    return np.vstack([lam, theta_cols])


def test_scenario_d_remodeling(samples, scenario):
    expected = np.hstack([_embed_x(-np.eye(3).ravel()[:, None], np.ones(1)), _embed_x(skew_basis())])
    for t in TS:
        f = evolution_fibre_at_x(scenario("D"), t, X0, samples)
        assert (f.dim, f.base_dim) == (4, 1)
        assert np.max(principal_angles(f.basis.basis, expected)) < 1e-6


def test_scenario_b_aging(samples, scenario):
    for t in TS:
        f = evolution_fibre_at_x(scenario("B"), t, X0, samples)
        assert (f.dim, f.base_dim) == (3, 0)
        assert np.max(principal_angles(f.basis.basis, _embed_x(skew_basis()))) < 1e-6


def test_scenario_a(samples, scenario):
    f = evolution_fibre_at_x(scenario("A"), 0.2, X0, samples)
    assert (f.dim, f.base_dim) == (1, 1)
    np.testing.assert_allclose(np.abs(f.basis.basis[:, 0]), np.eye(10)[0], atol=1e-12)
    f = evolution_fibre(scenario("A"), 0.2, X0, samples)
    assert (f.dim, f.base_dim) == (4, 4)
    assert np.max(principal_angles(f.basis.basis, np.eye(13)[:, :4])) < 1e-10


def test_scenario_e_body(samples, scenario):
    x1 = 0.3
    h, dh = 1 + x1 ** 2, 2 * x1
    v = np.zeros(13)
    v[1] = 1.0
    v[4:] = -dh / (2 * h) * np.eye(3).ravel()
    expected = np.column_stack([np.eye(13)[0], v, np.eye(13)[2], np.eye(13)[3],
                                *np.vstack([np.zeros((4, 3)), skew_basis()]).T])
    for t in (-1.0, 0.0, 0.7):
        f = evolution_fibre(scenario("E"), t, (x1, 0.0, 0.0), samples)
        assert (f.dim, f.base_dim) == (7, 4)
        assert np.max(principal_angles(f.basis.basis, expected)) < 1e-6


@pytest.mark.parametrize("rel_tol", [1e-10, 1e-8, 1e-6])
def test_dims_stable_over_tolerance(samples, scenario, rel_tol):
    for name, want in (("D", (4, 1)), ("B", (3, 0)), ("A", (1, 1))):
        for t in (-0.9, 0.0, 0.55):
            f = evolution_fibre_at_x(scenario(name), t, X0, samples, rel_tol)
            assert (f.dim, f.base_dim) == want
    f = evolution_fibre(scenario("E"), 0.1, (0.3, 0, 0), samples, rel_tol)
    assert (f.dim, f.base_dim) == (7, 4)


@pytest.mark.parametrize("name", list("ABCDE"))
def test_symmetry_embeds_in_fibre(samples, scenario, name):
    for t in np.linspace(-1, 1, 7):
        alg = symmetry_algebra(scenario(name), t, (0.3, 0, 0), samples)
        f = evolution_fibre_at_x(scenario(name), t, (0.3, 0, 0), samples)
        if alg.dim:
            assert span_residual(_embed_x(alg.basis.basis), f.basis.basis) <= 1e-8


@pytest.mark.parametrize("name", list("ABCDE"))
def test_scale_and_sampling_invariance(samples, scenario, name):
    other = sample_deformations(99, 80)
    m = scenario(name)
    for t in np.linspace(-1, 1, 5):
        ref = evolution_fibre_at_x(m, t, (0.3, 0, 0), samples)
        body = evolution_fibre(m, t, (0.3, 0, 0), samples)
        for mm, ss in ((m.scaled(1e3), samples), (m, other)):
            a = evolution_fibre_at_x(mm, t, (0.3, 0, 0), ss)
            b = evolution_fibre(mm, t, (0.3, 0, 0), ss)
            assert (a.dim, a.base_dim) == (ref.dim, ref.base_dim)
            assert (b.dim, b.base_dim) == (body.dim, body.base_dim)


def test_constraint_layout(samples, scenario):
    lin = linearize(scenario("E"), 0.0, (0.3, 0, 0), samples)
    body = evolution_constraints(lin)
    at_x = evolution_constraints(lin, at_x=True)
    assert body.entries.shape == (40, 13) and at_x.entries.shape == (40, 10)
    np.testing.assert_array_equal(body.entries[:, [0] + list(range(4, 13))], at_x.entries)
    np.testing.assert_array_equal(body.entries[:, 1:4], lin.d_x.reshape(40, 3))


def _fibre(base):
    return XEvolutionFibre(0.0, X0, nullspace(np.zeros((1, 10))), base)


def test_classify():
    assert classify_evolution([_fibre(1)] * 3).verdict == SMOOTH_REMODELING
    assert classify_evolution([_fibre(0)] * 3).verdict == SMOOTH_AGING
    v = classify_evolution([_fibre(1), _fibre(0)])
    assert v.verdict == MIXED and v.remodeling == (True, False)
    with pytest.raises(ValueError):
        classify_evolution([])


def test_classify_scenarios(samples, scenario):
    for name, want in (("D", SMOOTH_REMODELING), ("B", SMOOTH_AGING), ("A", SMOOTH_REMODELING)):
        fibres = [evolution_fibre_at_x(scenario(name), t, X0, samples) for t in TS]
        assert classify_evolution(fibres).verdict == want
