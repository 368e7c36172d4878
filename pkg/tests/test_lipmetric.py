import numpy as np
import pytest
from scipy.optimize import linprog

from conftest import random_cloud
from gmtlab.errors import ContractError, DimensionMismatchError, LpSizeError
from gmtlab.lipmetric import (assemble_ball_lp, f_ball, f_ball_potential,
                              f_scaling_residual, f_series, solve_ball_lp,
                              solve_ball_lp_potential)
from gmtlab.measures import DiscreteMeasure


def _grid_oracle_1d(mu, nu, r, grid_n=400):
    """Dense-grid brute force for 1-D instances embedded on the x-axis.

    Potential values on a fine grid (plus the exact site coordinates) with
    the same Lipschitz/cap constraint structure, solved by an external LP
    engine; independent of the production path.
    """
    xs = np.concatenate([
        np.linspace(-r, r, grid_n),
        mu.points[:, 0], nu.points[:, 0],
    ])
    xs = np.unique(xs[np.abs(xs) <= r])
    order = np.argsort(xs)
    xs = xs[order]
    k = xs.size
    # signed mass per grid point (exact coordinate match)
    mass = np.zeros(k)
    for pts, w, sign in ((mu.points, mu.weights, 1.0),
                         (nu.points, nu.weights, -1.0)):
        for p, wi in zip(pts[:, 0], w):
            if abs(p) <= r:
                mass[np.searchsorted(xs, p)] += sign * wi
    # adjacent Lipschitz constraints suffice in 1-D (distances add up)
    rows, rhs = [], []
    for i in range(k - 1):
        row = np.zeros(k)
        row[i], row[i + 1] = 1.0, -1.0
        rows.append(row.copy())
        rhs.append(xs[i + 1] - xs[i])
        row[i], row[i + 1] = -1.0, 1.0
        rows.append(row)
        rhs.append(xs[i + 1] - xs[i])
    caps = r - np.abs(xs)
    res = linprog(-mass, A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=list(zip(-caps, caps)), method="highs")
    assert res.status == 0
    return -res.fun


def test_identical_measures_vanish(line_entry):
    assert f_ball(line_entry.measure, line_entry.measure, 1.0) == 0.0


def test_atom_against_zero():
    atom = DiscreteMeasure.dirac(np.zeros(2), 3.0)
    assert f_ball(atom, DiscreteMeasure.empty(2), 1.0) == pytest.approx(3.0)


def test_two_atoms_half_apart():
    a = DiscreteMeasure.dirac(np.zeros(2))
    b = DiscreteMeasure.dirac(np.array([0.5, 0.0]))
    assert f_ball(a, b, 1.0) == pytest.approx(0.5, abs=1e-9)


def test_rejects_bad_inputs():
    mu = DiscreteMeasure.dirac(np.zeros(2))
    with pytest.raises(DimensionMismatchError):
        f_ball(mu, DiscreteMeasure.dirac(np.zeros(3)), 1.0)
    with pytest.raises(ContractError):
        f_ball(mu, mu, 0.0)


def test_site_cap_enforced():
    rng = np.random.default_rng(0)
    mu = DiscreteMeasure(rng.uniform(-0.5, 0.5, size=(400, 2)),
                         np.ones(400))
    nu = DiscreteMeasure(rng.uniform(-0.5, 0.5, size=(400, 2)),
                         np.ones(400))
    with pytest.raises(LpSizeError):
        f_ball(mu, nu, 1.0)


def test_one_signed_any_size_closed_form():
    rng = np.random.default_rng(1)
    mu = DiscreteMeasure(rng.uniform(-0.5, 0.5, size=(2000, 2)),
                         rng.uniform(0, 1, 2000))
    caps = 1.0 - np.linalg.norm(mu.points, axis=1)
    assert f_ball(mu, DiscreteMeasure.empty(2), 1.0) == pytest.approx(
        float(mu.weights @ caps))


def test_supports_outside_ball_give_zero():
    mu = DiscreteMeasure.dirac(np.array([5.0, 0.0]))
    nu = DiscreteMeasure.dirac(np.array([-7.0, 0.0]))
    assert f_ball(mu, nu, 1.0) == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_grid_oracle_1d(seed):
    rng = np.random.default_rng(seed)
    na, nb = rng.integers(2, 9, 2)
    mu = DiscreteMeasure(
        np.column_stack([rng.uniform(-1, 1, na), np.zeros(na)]),
        rng.uniform(0.1, 1.0, na))
    nu = DiscreteMeasure(
        np.column_stack([rng.uniform(-1, 1, nb), np.zeros(nb)]),
        rng.uniform(0.1, 1.0, nb))
    mine = f_ball(mu, nu, 1.0)
    oracle = _grid_oracle_1d(mu, nu, 1.0)
    assert mine == pytest.approx(oracle, abs=1e-6)


@pytest.mark.parametrize("seed", range(4))
def test_transport_agrees_with_dense_simplex(seed):
    rng = np.random.default_rng(40 + seed)
    mu = random_cloud(rng, int(rng.integers(3, 16)))
    nu = random_cloud(rng, int(rng.integers(3, 16)))
    lp = assemble_ball_lp(mu, nu, float(rng.uniform(0.6, 2.0)))
    v1 = solve_ball_lp(lp)
    v2, _ = solve_ball_lp_potential(lp)
    assert v1 == pytest.approx(v2, abs=1e-8 * (1 + v1))


def test_potential_is_feasible_and_attains_value():
    rng = np.random.default_rng(3)
    mu = random_cloud(rng, 10)
    nu = random_cloud(rng, 8)
    value, sites, f = f_ball_potential(mu, nu, 1.2)
    caps = 1.2 - np.linalg.norm(sites, axis=1)
    assert np.all(np.abs(f) <= caps + 1e-9)
    dist = np.linalg.norm(sites[:, None, :] - sites[None, :, :], axis=-1)
    gap = np.abs(f[:, None] - f[None, :]) - dist
    assert gap.max() <= 1e-9
    lp = assemble_ball_lp(mu, nu, 1.2)
    assert value == pytest.approx(float(lp.signed_mass @
                                        f[_match(sites, lp.sites)]), abs=1e-9)


def _match(sites_a, sites_b):
    # sites returned in assembly order; map b-rows into a-rows
    index = {tuple(p): i for i, p in enumerate(map(tuple, sites_a))}
    return np.array([index[tuple(p)] for p in map(tuple, sites_b)])


@pytest.mark.parametrize("seed", range(8))
def test_metric_axioms_on_seeded_clouds(seed):
    rng = np.random.default_rng(200 + seed)
    mu = random_cloud(rng, int(rng.integers(4, 12)))
    nu = random_cloud(rng, int(rng.integers(4, 12)))
    rho = random_cloud(rng, int(rng.integers(4, 12)))
    ab = f_ball(mu, nu, 1.0)
    ba = f_ball(nu, mu, 1.0)
    assert ab >= 0.0
    assert ab == pytest.approx(ba, abs=1e-7)
    ac = f_ball(mu, rho, 1.0)
    cb = f_ball(rho, nu, 1.0)
    assert ac <= ab + cb + 1e-7


def test_identity_of_indiscernibles():
    # distinct supports inside the ball separate at solver tolerance
    rng = np.random.default_rng(51)
    for _ in range(5):
        mu = random_cloud(rng, 6, spread=0.4)
        nu = random_cloud(rng, 6, spread=0.4)
        assert f_ball(mu, nu, 1.0) > 1e-7


def test_monotone_in_radius():
    rng = np.random.default_rng(17)
    mu = random_cloud(rng, 9)
    nu = random_cloud(rng, 7)
    vals = [f_ball(mu, nu, r) for r in (0.5, 1.0, 2.0, 4.0)]
    assert all(a <= b + 1e-9 for a, b in zip(vals, vals[1:]))


def test_series_of_identical_measures(line_entry):
    res = f_series(line_entry.measure, line_entry.measure, 5)
    assert res.value == 0.0
    assert res.tail_bound == 2.0 ** -5


def test_series_saturating_atom():
    atom = DiscreteMeasure.dirac(np.zeros(2), 3.0)
    res = f_series(atom, DiscreteMeasure.empty(2), 20)
    # every term saturates at 1: F_l = 3l >= 1
    assert res.value == pytest.approx(1.0 - 2.0 ** -20, abs=1e-15)
    assert res.tail_bound == 2.0 ** -20


def test_series_triangle_inequality():
    rng = np.random.default_rng(23)
    mu = random_cloud(rng, 6)
    nu = random_cloud(rng, 6)
    rho = random_cloud(rng, 6)
    f = lambda a, b: f_series(a, b, 8).value
    assert f(mu, rho) <= f(mu, nu) + f(nu, rho) + 1e-7


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_scaling_residual_small(r):
    rng = np.random.default_rng(31)
    mu = random_cloud(rng, 10, spread=0.5)
    nu = random_cloud(rng, 8, spread=0.5)
    fr = f_ball(mu, nu, r)
    assert f_scaling_residual(mu, nu, r) <= 1e-7 * (1 + fr)


def test_scaling_residual_exact_at_unit():
    rng = np.random.default_rng(37)
    mu = random_cloud(rng, 6)
    nu = random_cloud(rng, 6)
    assert f_scaling_residual(mu, nu, 1.0) == 0.0
