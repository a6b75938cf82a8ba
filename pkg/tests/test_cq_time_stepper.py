import math

import numpy as np
import pytest
from scipy.special import binom

from frstokes.cq_time_stepper import (
    DivergedError,
    PicardConvergenceError,
    SchemeConfig,
    cq_fractional_integral,
    cq_weights,
    step_implicit,
    step_linearized,
    _advance,
)
from frstokes.fem_assembly import (
    CaseAInitialData,
    ProblemSpec,
    Nonlinearity,
    SingleModeInitialData,
    assemble_lumped_mass,
    assemble_mass,
    assemble_stiffness,
    l2_norm,
    sqrt_one_plus_u2,
    zero_source,
)
from frstokes.mesh import build_symmetric_mesh
from frstokes.sparse_linalg import DiagMatrix, SparseSymMatrix


def brute_force_history(A, W, u0, alpha, gamma, tau, N, f=None, f_apply=None):
    """Literal expanded update with explicit double sums and dense solves."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    q = [1.0]
    for j in range(1, N + 1):
        q.append(q[-1] * (j - 1 + (1.0 - alpha)) / j)
    B = W + (tau + gamma * tau ** (1.0 - alpha)) * A
    hist = [np.atleast_1d(np.asarray(u0, dtype=float))]
    for n in range(1, N + 1):
        plain = sum(hist[j] for j in range(n))
        weighted = sum(q[n - j] * hist[j] for j in range(n))
        rhs = W @ hist[0] - A @ (tau * plain + gamma * tau ** (1.0 - alpha) * weighted)
        if f is not None:
            rhs = rhs + tau * sum(f_apply(f(hist[j - 1])) for j in range(1, n + 1))
        hist.append(np.linalg.solve(B, rhs))
    return np.array(hist)


def one_by_one(value):
    return SparseSymMatrix.from_coo(np.array([0]), np.array([0]),
                                    np.array([float(value)]), 1)


def test_weights_match_binomial_series():
    rng = np.random.default_rng(31)
    for _ in range(12):
        beta = rng.uniform(0.01, 1.99)
        n = int(rng.integers(1, 51))
        q = cq_weights(beta, n).q
        j = np.arange(n + 1)
        ref = (-1.0) ** j * binom(-beta, j)
        assert np.allclose(q, ref, rtol=1e-13, atol=0)


def test_weights_unit_beta_and_edge_cases():
    assert np.array_equal(cq_weights(1.0, 6).q, np.ones(7))
    assert np.array_equal(cq_weights(0.5, 0).q, [1.0])
    with pytest.raises(ValueError):
        cq_weights(0.0, 4)
    with pytest.raises(ValueError):
        cq_weights(0.5, -1)
    with pytest.raises(ValueError):
        cq_weights(0.5, 4).q[0] = 2.0


def test_weights_partial_sum_identity():
    rng = np.random.default_rng(37)
    for _ in range(10):
        beta = rng.uniform(0.01, 1.99)
        n = int(rng.integers(1, 51))
        q = cq_weights(beta, n).q
        q_up = cq_weights(beta + 1.0, n).q
        assert np.allclose(np.cumsum(q), q_up, rtol=1e-13)


def test_fractional_integral_constant_samples():
    # with beta = 1 every sample carries weight one: n+1 samples give (n+1) tau
    tau = 0.125
    for n in range(4):
        got = cq_fractional_integral(np.ones(n + 1), 1.0, tau)
        assert got == pytest.approx((n + 1) * tau, rel=1e-15)


def test_fractional_integral_first_order_accurate():
    # I^{1/2} of t is t^{3/2} / Gamma(5/2)
    beta, t_end = 0.5, 1.0
    exact = t_end**1.5 / math.gamma(2.5)
    errs = []
    for N in (64, 128, 256):
        tau = t_end / N
        t = np.arange(N + 1) * tau
        errs.append(abs(cq_fractional_integral(t, beta, tau) - exact))
    assert errs[0] / errs[1] == pytest.approx(2.0, abs=0.3)
    assert errs[1] / errs[2] == pytest.approx(2.0, abs=0.3)


def test_fractional_integral_validation():
    with pytest.raises(ValueError):
        cq_fractional_integral([], 0.5, 0.1)
    with pytest.raises(ValueError):
        cq_fractional_integral(np.ones((2, 2)), 0.5, 0.1)
    with pytest.raises(ValueError):
        cq_fractional_integral([1.0], 0.5, 0.0)


def test_scalar_first_step_closed_form():
    # 1x1 system, lam = 1, alpha = 1/2, gamma = 1, tau = 1/2, no source:
    # (1 + tau + sqrt(tau)) U1 = 1 - (tau + sqrt(tau) * q_1), q_1 = 1/2
    hist = _advance(one_by_one(1.0), DiagMatrix([1.0]), np.array([1.0]),
                    alpha=0.5, gamma=1.0, tau=0.5, N=2,
                    source_of_prev=None, cg_tol=1e-15)
    expect = (0.5 - math.sqrt(2.0) / 4.0) / (1.5 + math.sqrt(2.0) / 2.0)
    assert hist[1, 0] == pytest.approx(expect, abs=1e-15)
    ref = brute_force_history(1.0, 1.0, 1.0, 0.5, 1.0, 0.5, 2)
    assert np.allclose(hist, ref[:, :], atol=1e-15)


def test_scalar_trajectory_matches_double_sum():
    rng = np.random.default_rng(41)
    for _ in range(6):
        alpha = rng.uniform(0.1, 0.9)
        gamma = rng.uniform(0.2, 3.0)
        lam = rng.uniform(0.5, 40.0)
        hist = _advance(one_by_one(lam), DiagMatrix([1.0]), np.array([1.0]),
                        alpha=alpha, gamma=gamma, tau=0.1, N=8,
                        source_of_prev=None, cg_tol=1e-15)
        ref = brute_force_history(lam, 1.0, 1.0, alpha, gamma, 0.1, 8)
        assert np.allclose(hist, ref, atol=1e-13)


def variant_matrices(mesh, variant, source_lumping):
    A = assemble_stiffness(mesh).toarray()
    if variant == "lumped-linearized":
        W = np.diag(assemble_lumped_mass(mesh).values)
    else:
        idx = mesh.interior_nodes
        W = assemble_mass(mesh, full=True).toarray()[np.ix_(idx, idx)]
    if source_lumping:
        diag = assemble_lumped_mass(mesh).values

        def f_apply(fv):
            return diag * fv
    else:
        M_full = assemble_mass(mesh, full=True).toarray()
        idx = mesh.interior_nodes
        bnd = mesh.boundary_mask

        def f_apply(fv):
            full = np.zeros(mesh.n_nodes)
            full[bnd] = 1.0  # f(0) for the canonical nonlinearity
            full[idx] = fv
            return (M_full @ full)[idx]

    return A, W, f_apply


@pytest.mark.parametrize("variant,source_lumping", [
    ("galerkin-linearized", False),
    ("lumped-linearized", False),
    ("lumped-linearized", True),
])
def test_linearized_matches_double_sum_on_mesh(variant, source_lumping):
    mesh = build_symmetric_mesh(4)
    problem = ProblemSpec(alpha=0.4, gamma=0.7, T=0.5,
                          nonlinearity=sqrt_one_plus_u2(),
                          initial_data=CaseAInitialData())
    cfg = SchemeConfig(variant=variant, N=6, source_lumping=source_lumping,
                       store_full=True, cg_tol=1e-14)
    traj = step_linearized(cfg, problem, mesh)

    A, W, f_apply = variant_matrices(mesh, variant, source_lumping)
    u0 = problem.initial_data.field(mesh).interior()
    f = problem.nonlinearity
    ref = brute_force_history(A, W, u0, problem.alpha, problem.gamma,
                              0.5 / 6, 6, f=f, f_apply=f_apply)
    got = traj.values[:, mesh.interior_nodes]
    assert np.allclose(got, ref, atol=1e-12)


def test_implicit_matches_double_sum_fixed_point():
    # solve the inner fixed point by brute iteration on top of dense solves
    mesh = build_symmetric_mesh(4)
    problem = ProblemSpec(alpha=0.6, gamma=1.3, T=0.5,
                          nonlinearity=sqrt_one_plus_u2(),
                          initial_data=CaseAInitialData())
    cfg = SchemeConfig(variant="galerkin-implicit", N=6, store_full=True,
                       cg_tol=1e-14, picard_tol=1e-14)
    traj = step_implicit(cfg, problem, mesh)

    A, W, f_apply = variant_matrices(mesh, "galerkin-implicit", False)
    u0 = problem.initial_data.field(mesh).interior()
    f = problem.nonlinearity
    tau = 0.5 / 6
    q = cq_weights(1.0 - problem.alpha, 6).q
    B = W + (tau + problem.gamma * tau ** (1.0 - problem.alpha)) * A
    hist = [u0]
    for n in range(1, 7):
        plain = sum(hist[j] for j in range(n))
        weighted = sum(q[n - j] * hist[j] for j in range(n))
        base = (W @ hist[0]
                - A @ (tau * plain + problem.gamma * tau ** (1.0 - problem.alpha) * weighted)
                + tau * sum(f_apply(f(hist[j])) for j in range(n)))
        u = hist[-1].copy()
        for _ in range(200):
            u_new = np.linalg.solve(B, base + tau * f_apply(f(u)))
            if np.linalg.norm(u_new - u) <= 1e-15:
                u = u_new
                break
            u = u_new
        hist.append(u)
    got = traj.values[:, mesh.interior_nodes]
    assert np.allclose(got, np.array(hist), atol=1e-11)


def test_lumped_single_mode_reduces_to_scalar_recursion():
    M, k, l = 8, 1, 1
    mesh = build_symmetric_mesh(M)
    lam_h = 4.0 * M**2 * (np.sin(k * np.pi / (2 * M)) ** 2
                          + np.sin(l * np.pi / (2 * M)) ** 2)
    # the interpolated mode is a joint eigenvector: A phi = lam_h D phi
    phi = SingleModeInitialData(k, l).field(mesh).interior()
    A = assemble_stiffness(mesh)
    D = assemble_lumped_mass(mesh)
    assert np.allclose(A.matvec(phi), lam_h * D.matvec(phi), atol=1e-11)

    problem = ProblemSpec(alpha=0.5, gamma=1.0, T=1.0,
                          nonlinearity=zero_source(),
                          initial_data=SingleModeInitialData(k, l))
    cfg = SchemeConfig(variant="lumped-linearized", N=16, store_full=True)
    traj = step_linearized(cfg, problem, mesh)
    scalar = brute_force_history(lam_h, 1.0, 1.0, 0.5, 1.0, 1.0 / 16, 16)[:, 0]
    got = traj.values[:, mesh.interior_nodes]
    assert np.allclose(got, scalar[:, None] * phi[None, :], atol=1e-12)


def test_snapshot_bookkeeping():
    mesh = build_symmetric_mesh(4)
    problem = ProblemSpec(alpha=0.5, gamma=1.0, T=1.0,
                          nonlinearity=sqrt_one_plus_u2(),
                          initial_data=CaseAInitialData())
    traj = step_linearized(SchemeConfig(variant="lumped-linearized", N=250),
                           problem, mesh)
    # default stride ceil(N/100) = 3, first and last always kept
    assert traj.steps[0] == 0 and traj.steps[-1] == 250
    assert 249 in traj.steps and traj.times[-1] == pytest.approx(1.0)
    assert np.allclose(traj.times, traj.steps * traj.tau)
    assert traj.values.shape == (len(traj.steps), mesh.n_nodes)
    assert np.all(traj.values[:, mesh.boundary_mask] == 0.0)

    full = step_linearized(
        SchemeConfig(variant="lumped-linearized", N=5, store_full=True),
        problem, mesh)
    assert np.array_equal(full.steps, np.arange(6))
    fld = full.final()
    assert np.array_equal(fld.values, full.values[-1])
    assert np.array_equal(full.field_at(0).values,
                          problem.initial_data.field(mesh).values)


def test_config_validation():
    with pytest.raises(ValueError):
        SchemeConfig(variant="crank-nicolson", N=4)
    with pytest.raises(ValueError):
        SchemeConfig(variant="lumped-linearized", N=0)
    with pytest.raises(ValueError):
        SchemeConfig(variant="lumped-linearized", N=4, cg_tol=0.0)
    with pytest.raises(ValueError):
        SchemeConfig(variant="galerkin-implicit", N=4, picard_maxit=0)
    cfg = SchemeConfig(variant="lumped-linearized", N=4, tau=0.3)
    with pytest.raises(ValueError):
        cfg.resolve_tau(1.0)
    assert SchemeConfig(variant="lumped-linearized", N=4).resolve_tau(2.0) == 0.5


def test_variant_dispatch_guards():
    mesh = build_symmetric_mesh(2)
    problem = ProblemSpec(alpha=0.5, gamma=1.0, T=1.0,
                          nonlinearity=sqrt_one_plus_u2(),
                          initial_data=CaseAInitialData())
    with pytest.raises(ValueError):
        step_linearized(SchemeConfig(variant="galerkin-implicit", N=2), problem, mesh)
    with pytest.raises(ValueError):
        step_implicit(SchemeConfig(variant="lumped-linearized", N=2), problem, mesh)


def test_implicit_equals_linearized_for_zero_source():
    mesh = build_symmetric_mesh(6)
    kw = dict(alpha=0.3, gamma=2.0, T=1.0, initial_data=CaseAInitialData())
    lin = step_linearized(
        SchemeConfig(variant="galerkin-linearized", N=8, store_full=True),
        ProblemSpec(nonlinearity=zero_source(), **kw), mesh)
    imp = step_implicit(
        SchemeConfig(variant="galerkin-implicit", N=8, store_full=True),
        ProblemSpec(nonlinearity=zero_source(), **kw), mesh)
    assert np.allclose(lin.values, imp.values, atol=1e-12)


def test_implicit_linearized_gap_shrinks_first_order():
    mesh = build_symmetric_mesh(8)
    gaps = []
    for N in (8, 16, 32):
        kw = dict(alpha=0.5, gamma=1.0, T=1.0, initial_data=CaseAInitialData(),
                  nonlinearity=sqrt_one_plus_u2())
        lin = step_linearized(
            SchemeConfig(variant="galerkin-linearized", N=N), ProblemSpec(**kw), mesh)
        imp = step_implicit(
            SchemeConfig(variant="galerkin-implicit", N=N), ProblemSpec(**kw), mesh)
        gaps.append(l2_norm(mesh, lin.final().values - imp.final().values))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[0] / gaps[1] == pytest.approx(2.0, abs=0.5)
    assert gaps[1] / gaps[2] == pytest.approx(2.0, abs=0.5)


def test_implicit_picard_failure_raises_after_warning():
    mesh = build_symmetric_mesh(4)
    stiff = Nonlinearity(fn=lambda u: 400.0 * u, lipschitz=400.0, name="stiff")
    problem = ProblemSpec(alpha=0.25, gamma=1.0, T=1.0,
                          nonlinearity=stiff, initial_data=CaseAInitialData())
    cfg = SchemeConfig(variant="galerkin-implicit", N=100)
    with pytest.warns(RuntimeWarning, match="may not contract"):
        with pytest.raises((PicardConvergenceError, DivergedError)):
            step_implicit(cfg, problem, mesh)


def test_trajectory_stays_bounded():
    # f has linear growth at most, so a short run cannot blow up
    mesh = build_symmetric_mesh(8)
    problem = ProblemSpec(alpha=0.5, gamma=1.0, T=1.0,
                          nonlinearity=sqrt_one_plus_u2(),
                          initial_data=CaseAInitialData())
    traj = step_linearized(
        SchemeConfig(variant="lumped-linearized", N=20, store_full=True),
        problem, mesh)
    u0_norm = l2_norm(mesh, traj.values[0])
    norms = [l2_norm(mesh, v) for v in traj.values]
    assert max(norms) <= u0_norm + 2.0 * problem.T
