"""Linear error-analysis machinery for partitioned Runge-Kutta schemes.

For ``u' = L u + g(t)`` under a splitting ``L = L_1 + ... + L_r`` with
``Z_k = dt L_k``, the one-step map of an explicit scheme is affine with
amplification matrix ``R``.  This module builds the stage-residual blocks
``r_1 .. r_s`` (by block forward substitution, never forming the stacked
stage system), the local-error coefficient matrices ``d_{j,k}``, and the
order-reduction matrix ``W`` that links stage-order consistency to one
extra order of convergence.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from .decomposition import CellPartition
from .tableau import PRKTableau, classical_order, stage_order

__all__ = [
    "LinearSplitting",
    "ErrorOperators",
    "build_error_operators",
    "WResult",
    "solve_W",
    "StabilityReport",
    "stability_check",
    "PowerBound",
    "powerbound_check",
    "equal_A_coefficients",
    "predicted_local_error",
    "linearize_parts",
    "stage_response_rank",
]

COND_LIMIT = 1e12  # beyond this the W norm is considered meaningless


def _inf_norm(M: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(M), axis=1))) if M.size else 0.0


@dataclass(frozen=True)
class LinearSplitting:
    """Scaled operator parts ``Z_k = dt * L_k`` of one linear problem."""

    Zs: tuple[np.ndarray, ...]

    def __post_init__(self):
        m = self.Zs[0].shape[0]
        for Zk in self.Zs:
            if Zk.shape != (m, m):
                raise ValueError("all Z_k must be square with equal size")

    @property
    def r(self) -> int:
        return len(self.Zs)

    @property
    def m(self) -> int:
        return self.Zs[0].shape[0]

    @property
    def Z(self) -> np.ndarray:
        return sum(self.Zs[1:], start=self.Zs[0].copy())

    @classmethod
    def from_matrices(cls, Zs) -> "LinearSplitting":
        return cls(tuple(np.asarray(Z, dtype=float) for Z in Zs))

    @classmethod
    def cell_based(cls, L: np.ndarray, dt: float, partition: CellPartition) -> "LinearSplitting":
        """Row masking ``Z_k = dt I_k L`` for a cell-based decomposition."""
        L = np.asarray(L, dtype=float)
        return cls(
            tuple(dt * np.where(mk[:, None], L, 0.0) for mk in partition.masks)
        )


@dataclass(frozen=True)
class ErrorOperators:
    """Stage-residual blocks, amplification matrix and local-error coefficients.

    ``d[(j, k)]`` is the coefficient matrix of ``dt^j / j! *
    phi_k^(j-1)(t_n)`` in the local error, for ``j = 1..j_max`` and part
    index ``k`` (0-based).
    """

    r_blocks: tuple[np.ndarray, ...]
    R: np.ndarray
    d: dict[tuple[int, int], np.ndarray]
    j_max: int

    @property
    def rT_e(self) -> np.ndarray:
        acc = self.r_blocks[0].copy()
        for blk in self.r_blocks[1:]:
            acc += blk
        return acc


def build_error_operators(
    tab: PRKTableau, ls: LinearSplitting, j_max: int | None = None
) -> ErrorOperators:
    """Assemble ``r_1..r_s``, ``R`` and the ``d_{j,k}`` for one splitting.

    The stage system is block lower triangular for explicit tableaus, so
    the blocks follow from forward substitution with O(s^2) products of
    size m.  ``j_max`` defaults to the classical order plus one; terms
    beyond that carry no information in the local-error expansion.
    """
    if ls.r != tab.r:
        raise ValueError("splitting and tableau part counts differ")
    if j_max is None:
        j_max = classical_order(tab) + 1
    m = ls.m
    s, r = tab.s, tab.r
    A = tab.A_float()
    b = tab.b_float()
    eye = np.eye(m)

    # x_j = B_j + sum_{i>j} x_i M_{ij},  B_j = sum_k b_j^(k) Z_k,
    # M_{ij} = sum_k a_ij^(k) Z_k
    x: list[np.ndarray | None] = [None] * s
    for j in range(s - 1, -1, -1):
        acc = np.zeros((m, m))
        for k in range(r):
            if b[k][j] != 0.0:
                acc += b[k][j] * ls.Zs[k]
        for i in range(j + 1, s):
            coeff = [A[k][i][j] for k in range(r)]
            if any(coeff):
                Mij = np.zeros((m, m))
                for k in range(r):
                    if coeff[k]:
                        Mij += coeff[k] * ls.Zs[k]
                acc += x[i] @ Mij
        x[j] = acc

    R = eye.copy()
    for blk in x:
        R += blk

    d: dict[tuple[int, int], np.ndarray] = {}
    for j in range(1, j_max + 1):
        cj = [ci**j for ci in tab.c]
        cjm1 = [ci ** (j - 1) if j > 1 else Fraction(1) for ci in tab.c]
        for k in range(r):
            lead = 1 - j * sum(
                (bi * ci for bi, ci in zip(tab.b[k], cjm1)), Fraction(0)
            )
            vec = [
                cj[i]
                - j * sum((tab.A[k][i][l] * cjm1[l] for l in range(s)), Fraction(0))
                for i in range(s)
            ]
            djk = float(lead) * eye.copy()
            for i in range(s):
                vi = float(vec[i])
                if vi:
                    djk += x[i] * vi
            d[(j, k)] = djk

    return ErrorOperators(r_blocks=tuple(x), R=R, d=d, j_max=j_max)


@dataclass(frozen=True)
class WResult:
    W: np.ndarray | None
    norm_w: float
    cond_rTe: float
    ok: bool
    q: int


def solve_W(
    tab: PRKTableau,
    ls: LinearSplitting,
    partition: CellPartition,
    cond_limit: float = COND_LIMIT,
) -> WResult:
    """Solve ``(r^T e) W = sum_k d_{q+1,k} I_k`` for the damping matrix W.

    A uniformly bounded ``W`` upgrades order-q consistency to order-(q+1)
    convergence in the maximum norm.  When ``r^T e`` is singular or its
    condition estimate exceeds ``cond_limit`` the result is flagged
    unusable instead of raising.
    """
    q = stage_order(tab)
    ops = build_error_operators(tab, ls, j_max=q + 1)
    M = ops.rT_e
    B = np.zeros_like(M)
    for k, mk in enumerate(partition.masks):
        B += ops.d[(q + 1, k)] * mk[None, :].astype(float)
    try:
        Minv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        return WResult(W=None, norm_w=float("inf"), cond_rTe=float("inf"), ok=False, q=q)
    cond = _inf_norm(M) * _inf_norm(Minv)
    W = Minv @ B
    return WResult(W=W, norm_w=_inf_norm(W), cond_rTe=cond, ok=bool(cond <= cond_limit), q=q)


@dataclass(frozen=True)
class StabilityReport:
    norm_part1: float
    norm_part2: float
    norm_Z2: float
    theta: float
    stab1: bool
    stab2: bool
    theta_ok: bool


def stability_check(ls: LinearSplitting, tol: float = 1e-12) -> StabilityReport:
    """Check the two-part multirate stability conditions.

    ``|I + Z_1| <= 1`` and ``|I + Z_2/2| <= 1`` in the maximum norm, plus
    the strengthened requirement ``|Z_2| = 4 theta < 4`` used for the
    two-stage scheme's W bound.
    """
    if ls.r != 2:
        raise ValueError("stability conditions are stated for two parts")
    eye = np.eye(ls.m)
    n1 = _inf_norm(eye + ls.Zs[0])
    n2 = _inf_norm(eye + 0.5 * ls.Zs[1])
    nz2 = _inf_norm(ls.Zs[1])
    theta = nz2 / 4.0
    return StabilityReport(
        norm_part1=n1,
        norm_part2=n2,
        norm_Z2=nz2,
        theta=theta,
        stab1=bool(n1 <= 1.0 + tol),
        stab2=bool(n2 <= 1.0 + tol),
        theta_ok=bool(theta < 1.0),
    )


@dataclass(frozen=True)
class PowerBound:
    max_norm: float
    arg_n: int


def powerbound_check(R: np.ndarray, n_max: int) -> PowerBound:
    """Track ``max_n |R^n|_inf`` for ``n = 0..n_max`` (with ``|R^0| = 1``)."""
    best, arg = 1.0, 0
    P = np.eye(R.shape[0])
    for n in range(1, n_max + 1):
        P = P @ R
        nn = _inf_norm(P)
        if nn > best:
            best, arg = nn, n
    return PowerBound(max_norm=best, arg_n=arg)


def equal_A_coefficients(tab: PRKTableau, j_max: int) -> dict[tuple[int, int], Fraction]:
    """Scalar error coefficients ``q_{jk} = b_k^T A^(j-1) (c^2 - 2 A c)``.

    Defined only when all parts share one coefficient matrix; a method of
    order p has ``q_{jk} = 0`` for ``j <= p - 2``.  Keys are ``(j, k)``
    with ``j`` starting at 1 and 0-based part ``k``.
    """
    A = tab.A[0]
    if any(Ak != A for Ak in tab.A[1:]):
        raise ValueError("parts have different coefficient matrices")
    s = tab.s
    c2 = [ci**2 for ci in tab.c]
    Ac = [sum((A[i][l] * tab.c[l] for l in range(s)), Fraction(0)) for i in range(s)]
    v = [c2[i] - 2 * Ac[i] for i in range(s)]
    out: dict[tuple[int, int], Fraction] = {}
    for j in range(1, j_max + 1):
        for k in range(tab.r):
            out[(j, k)] = sum(
                (bi * vi for bi, vi in zip(tab.b[k], v)), Fraction(0)
            )
        v = [sum((A[i][l] * v[l] for l in range(s)), Fraction(0)) for i in range(s)]
    return out


def predicted_local_error(
    tab: PRKTableau,
    ls: LinearSplitting,
    phi_derivatives,
    dt: float,
    order: int | None = None,
) -> np.ndarray:
    """Leading local-error terms from the coefficient matrices.

    ``phi_derivatives[k][i]`` must hold the ``i``-th time derivative of
    ``phi_k(t) = F_k(t, u(t))`` at the step start, for ``i = 0..order-1``;
    the returned vector is the expansion truncated after ``dt^order``.
    """
    if order is None:
        order = min(len(p) for p in phi_derivatives)
    ops = build_error_operators(tab, ls, j_max=order)
    delta = np.zeros(ls.m)
    for j in range(1, order + 1):
        scale = dt**j / factorial(j)
        for k in range(tab.r):
            delta += scale * (ops.d[(j, k)] @ np.asarray(phi_derivatives[k][j - 1]))
    return delta


def linearize_parts(parts, m: int, t: float = 0.0) -> list[np.ndarray]:
    """Extract the matrices of linear part evaluators by probing basis vectors.

    Subtracts the response at zero so affine boundary terms drop out.
    Intended for small systems in analysis and testing.
    """
    zero = [np.zeros(m) if v is None else v for v in parts.eval_parts(t, np.zeros(m))]
    mats = [np.zeros((m, m)) for _ in range(parts.r)]
    for i in range(m):
        e = np.zeros(m)
        e[i] = 1.0
        vals = parts.eval_parts(t, e)
        for k in range(parts.r):
            mats[k][:, i] = vals[k] - zero[k]
    return mats


def stage_response_rank(
    tab: PRKTableau, m: int = 4, trials: int = 4, seed: int = 0, rtol: float = 1e-10
) -> int:
    """Numerical rank of the stacked stage blocks over random splittings.

    Rank below ``s`` signals a reducible scheme: some stage perturbation
    pattern can never influence the step result.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(trials):
        Zs = [rng.standard_normal((m, m)) for _ in range(tab.r)]
        ops = build_error_operators(tab, LinearSplitting.from_matrices(Zs), j_max=1)
        rows.append(np.concatenate([blk.ravel() for blk in ops.r_blocks]))
    stacked = np.array(rows).reshape(trials, tab.s, m * m)
    stacked = np.swapaxes(stacked, 0, 1).reshape(tab.s, trials * m * m)
    sv = np.linalg.svd(stacked, compute_uv=False)
    return int(np.sum(sv > rtol * sv[0]))
