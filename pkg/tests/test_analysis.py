"""Amplification operator, local-error coefficients, W matrix, stability."""

from fractions import Fraction

import numpy as np
import pytest

from prk.analysis import (
    LinearSplitting,
    build_error_operators,
    equal_A_coefficients,
    linearize_parts,
    powerbound_check,
    predicted_local_error,
    solve_W,
    stability_check,
    stage_response_rank,
)
from prk.decomposition import CellPartition, cell_split
from prk.spatial import upwind1d
from prk.stepper import prk_step
from prk.tableau import PRKTableau, builtin_names, builtin_tableau, stage_order


def _upwind_splitting(m=20, nu=0.4, lo=None, hi=None):
    prob = upwind1d(m=m, boundary="inflow")
    refined = np.zeros(m, dtype=bool)
    refined[(lo if lo is not None else m // 3):(hi if hi is not None else 2 * m // 3)] = True
    part = CellPartition.two_region(refined)
    dt = nu / m
    return prob, part, LinearSplitting.cell_based(prob.linear_matrix, dt, part), dt


def _random_splitting(rng, m, r, scale=0.5):
    return LinearSplitting.from_matrices(
        [scale * rng.standard_normal((m, m)) for _ in range(r)]
    )


# ----------------------------------------------------------------------
# operator assembly
# ----------------------------------------------------------------------

def test_zero_splitting_gives_identity():
    m = 6
    ls = LinearSplitting.from_matrices([np.zeros((m, m)), np.zeros((m, m))])
    for name in ("OS1", "TW1", "TW2", "CS2", "SH2"):
        ops = build_error_operators(builtin_tableau(name), ls)
        assert np.array_equal(ops.R, np.eye(m))
        for blk in ops.r_blocks:
            assert np.abs(blk).max() == 0.0
        assert np.abs(ops.d[(1, 0)]).max() == 0.0  # order >= 1


def test_forward_euler_amplification():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((5, 5))
    ops = build_error_operators(builtin_tableau("FE1"),
                                LinearSplitting.from_matrices([Z]))
    assert np.abs(ops.R - (np.eye(5) + Z)).max() < 1e-15


def test_two_stage_multirate_closed_forms():
    # the two-part scheme on upwind advection: residual blocks, their sum
    # and the leading error coefficients all have short closed forms
    _, part, ls, _ = _upwind_splitting()
    m = ls.m
    Z, Z2 = ls.Z, ls.Zs[1]
    ops = build_error_operators(builtin_tableau("OS1"), ls)
    eye = np.eye(m)
    assert np.abs(ops.r_blocks[0] - 0.5 * Z @ (eye + 0.5 * Z2)).max() < 1e-14
    assert np.abs(ops.r_blocks[1] - 0.5 * Z).max() < 1e-14
    assert np.abs(ops.rT_e - Z @ (eye + 0.25 * Z2)).max() < 1e-14
    assert np.abs(ops.d[(1, 0)] - 0.25 * Z).max() < 1e-14
    assert np.abs(ops.d[(1, 1)]).max() == 0.0


def test_part_count_mismatch():
    ls = LinearSplitting.from_matrices([np.zeros((3, 3))])
    with pytest.raises(ValueError):
        build_error_operators(builtin_tableau("OS1"), ls)


def test_error_coefficients_vanish_up_to_stage_order():
    rng = np.random.default_rng(1)
    for name in builtin_names():
        tab = builtin_tableau(name)
        q = stage_order(tab)
        ls = _random_splitting(rng, 8, tab.r)
        ops = build_error_operators(tab, ls, j_max=q + 1)
        for j in range(1, q + 1):
            for k in range(tab.r):
                assert np.abs(ops.d[(j, k)]).max() < 1e-13, (name, j, k)


def test_error_coefficients_scale_with_dt():
    # d_{j,k} = O(dt^(p+1-j)) when every part matrix scales with dt
    prob, part, _, _ = _upwind_splitting()
    L = prob.linear_matrix
    for name, p in (("CS2", 2), ("TW2", 2), ("OS1", 1)):
        tab = builtin_tableau(name)
        q = stage_order(tab)
        j = q + 1
        dts = [0.02 / 2**i for i in range(4)]
        normvals = []
        for dt in dts:
            ls = LinearSplitting.cell_based(L, dt / L.shape[0], part)
            ops = build_error_operators(tab, ls, j_max=j)
            normvals.append(max(np.abs(ops.d[(j, k)]).max() for k in range(2)))
        slope = np.polyfit(np.log2(dts), np.log2(normvals), 1)[0]
        assert abs(slope - (p + 1 - j)) < 0.3, (name, slope)


def test_stage_blocks_have_full_rank():
    for name in builtin_names():
        tab = builtin_tableau(name)
        assert stage_response_rank(tab) == tab.s, name


# ----------------------------------------------------------------------
# W matrix
# ----------------------------------------------------------------------

def test_solve_w_two_stage_closed_form():
    # raw solution of (r^T e) W = sum_k d_{1,k} I_k; the closed form
    # (I + Z2/4)^{-1} I1 absorbs the leading scalar 1/4 of d_{1,1}
    _, part, ls, _ = _upwind_splitting(m=40, nu=0.5)
    m = ls.m
    res = solve_W(builtin_tableau("OS1"), ls, part)
    closed = np.linalg.solve(np.eye(m) + 0.25 * ls.Zs[1],
                             np.diag(part.masks[0].astype(float)))
    assert res.ok and res.q == 0
    assert np.abs(4.0 * res.W - closed).max() < 1e-12
    # and the defining equation holds as stated
    lhs = (build_error_operators(builtin_tableau("OS1"), ls, j_max=1).rT_e) @ res.W
    rhs = 0.25 * ls.Z @ np.diag(part.masks[0].astype(float))
    assert np.abs(lhs - rhs).max() < 1e-13


def test_solve_w_trivial_refined_part():
    # with Z2 = 0 (and a nonsingular Z1, so not a cell splitting) the
    # closed form collapses to the region-1 indicator
    rng = np.random.default_rng(8)
    m = 12
    Z1 = 0.2 * rng.standard_normal((m, m)) + np.eye(m)
    refined = np.zeros(m, dtype=bool)
    refined[7:] = True
    part = CellPartition.two_region(refined)
    ls = LinearSplitting.from_matrices([Z1, np.zeros((m, m))])
    res = solve_W(builtin_tableau("OS1"), ls, part)
    assert res.ok
    scaled = 4.0 * res.W
    assert np.abs(scaled - np.diag(part.masks[0].astype(float))).max() < 1e-12
    assert abs(4.0 * res.norm_w - 1.0) < 1e-12


def test_solve_w_norm_bound_under_theta():
    for nu in (0.2, 0.5, 0.9):
        _, part, ls, _ = _upwind_splitting(m=60, nu=nu)
        stab = stability_check(ls)
        theta = stab.theta
        assert theta < 1.0
        res = solve_W(builtin_tableau("OS1"), ls, part)
        assert 4.0 * res.norm_w <= 1.0 / (1.0 - theta) + 1e-12


def test_solve_w_flags_singular_system():
    m = 5
    ls = LinearSplitting.from_matrices([np.zeros((m, m)), np.zeros((m, m))])
    part = CellPartition.two_region(np.array([False, False, True, True, True]))
    res = solve_W(builtin_tableau("OS1"), ls, part)
    assert not res.ok
    assert res.cond_rTe == np.inf or res.cond_rTe > 1e12


# ----------------------------------------------------------------------
# stability
# ----------------------------------------------------------------------

def test_stability_norms_for_upwind():
    # interior coarse rows of I + Z1 have row sum |1 - nu| + nu = 1
    _, _, ls, _ = _upwind_splitting(m=30, nu=0.5)
    rep = stability_check(ls)
    assert rep.stab1 and rep.stab2
    assert abs(rep.norm_part1 - 1.0) < 1e-12
    assert abs(rep.norm_part2 - 1.0) < 1e-12


def test_stability_zero_splitting():
    ls = LinearSplitting.from_matrices([np.zeros((4, 4)), np.zeros((4, 4))])
    rep = stability_check(ls)
    assert rep.norm_part1 == 1.0 and rep.norm_part2 == 1.0
    assert rep.stab1 and rep.stab2 and rep.theta == 0.0


def test_stability_refined_region_boundary():
    # |1 - nu2/2| + nu2/2 equals one exactly at nu2 = 2 and exceeds it above
    m = 24

    def norm2_at(nu2):
        h = 1.0 / m
        refined = np.zeros(m, dtype=bool)
        refined[m // 2 :] = True
        dx = np.where(refined, h / 2, h)
        prob = upwind1d(dx=dx, boundary="inflow")
        part = CellPartition.two_region(refined)
        dt = nu2 * h / 2  # Courant number nu2 on the refined cells
        ls = LinearSplitting.cell_based(prob.linear_matrix, dt, part)
        return stability_check(ls)

    at2 = norm2_at(2.0)
    assert abs(at2.norm_part2 - 1.0) < 1e-12 and at2.stab2
    above = norm2_at(2.4)
    assert above.norm_part2 > 1.0 and not above.stab2


def test_stability_requires_two_parts():
    with pytest.raises(ValueError):
        stability_check(LinearSplitting.from_matrices([np.zeros((3, 3))]))


def test_powerbound_identity_and_contraction():
    assert powerbound_check(np.eye(4), 10).max_norm == 1.0
    res = powerbound_check(0.5 * np.eye(4), 10)
    assert res.max_norm == 1.0 and res.arg_n == 0


def test_powerbound_stable_multirate_step():
    _, part, ls, _ = _upwind_splitting(m=100, nu=0.5)
    ops = build_error_operators(builtin_tableau("OS1"), ls)
    res = powerbound_check(ops.R, 200)
    assert res.max_norm <= 1.0 + 1e-10


# ----------------------------------------------------------------------
# equal-coefficient expansion
# ----------------------------------------------------------------------

def test_equal_A_second_order_coefficient():
    q = equal_A_coefficients(builtin_tableau("ETR2"), j_max=2)
    assert q[(1, 0)] == Fraction(1, 2)


def test_equal_A_third_order_leading_term_vanishes():
    ssprk3 = PRKTableau.from_coeffs(
        [[[0, 0, 0], [1, 0, 0], ["1/4", "1/4", 0]]],
        [["1/6", "1/6", "2/3"]],
        name="SSPRK3",
    )
    q = equal_A_coefficients(ssprk3, j_max=2)
    assert q[(1, 0)] == 0
    assert q[(2, 0)] != 0


def test_equal_A_rejects_distinct_matrices():
    with pytest.raises(ValueError):
        equal_A_coefficients(builtin_tableau("OS1"), j_max=1)


# ----------------------------------------------------------------------
# local-error prediction
# ----------------------------------------------------------------------

def _manufactured(prob, alpha=0.7):
    x = prob.grid.x
    s = np.sin(2 * np.pi * x) + 1.5
    uex = lambda t: s * np.exp(alpha * t)
    L = prob.linear_matrix
    F = lambda t, v: L @ v + (alpha * uex(t) - L @ uex(t))
    return uex, F, alpha


def test_predicted_error_matches_one_step_defect():
    prob, part, ls, dt = _upwind_splitting(m=16, nu=0.3)
    uex, F, alpha = _manufactured(prob)
    parts = cell_split(F, part)
    tab = builtin_tableau("OS1")
    t0 = 0.4
    defect = uex(t0 + dt) - prk_step(tab, parts, t0, dt, uex(t0))
    phis = [[np.where(mk, alpha * uex(t0), 0.0)] for mk in part.masks]
    pred = predicted_local_error(tab, ls, phis, dt, order=1)
    # truncation is one power of dt beyond the predicted term
    assert np.abs(defect - pred).max() < 10 * dt**2


def test_linear_in_time_solution_has_zero_defect_for_stage_order_one():
    # phi_k is constant for an affine-in-time solution, so every term
    # beyond the vanishing j=1 coefficient drops out exactly
    m = 14
    prob = upwind1d(m=m, boundary="inflow")
    refined = np.zeros(m, dtype=bool)
    refined[4:9] = True
    part = CellPartition.two_region(refined)
    x = prob.grid.x
    a, b = np.sin(2 * np.pi * x), np.cos(2 * np.pi * x) + 1.2
    uex = lambda t: a + b * t
    L = prob.linear_matrix
    F = lambda t, v: L @ v + (b - L @ uex(t))
    for name in ("TW1", "TW2", "SH2"):
        dt = 0.05
        defect = uex(dt) - prk_step(builtin_tableau(name), cell_split(F, part),
                                    0.0, dt, uex(0.0))
        assert np.abs(defect).max() < 1e-13, name


def test_linearize_parts_recovers_masked_matrix():
    m = 9
    prob = upwind1d(m=m, boundary="inflow")
    refined = np.zeros(m, dtype=bool)
    refined[5:] = True
    part = CellPartition.two_region(refined)
    parts = cell_split(prob.rhs, part)
    mats = linearize_parts(parts, m)
    L = prob.linear_matrix
    assert np.abs(mats[0] - np.where(part.masks[0][:, None], L, 0.0)).max() < 1e-12
    assert np.abs(mats[1] - np.where(part.masks[1][:, None], L, 0.0)).max() < 1e-12
