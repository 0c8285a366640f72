"""Explicit partitioned Runge-Kutta stepping and reference integration."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .decomposition import mass
from .tableau import PRKTableau

__all__ = [
    "IntegrationDiverged",
    "IntegrationRun",
    "IntegrationResult",
    "prk_step",
    "integrate",
    "reference_integrate",
]


class IntegrationDiverged(RuntimeError):
    """Raised when a stage or step produces non-finite values."""

    def __init__(self, message: str, step: int = -1, t: float = float("nan")):
        super().__init__(message)
        self.step = step
        self.t = t


class _ListParts:
    """Adapter letting a plain list of evaluators act as a decomposition."""

    def __init__(self, fns: Sequence[Callable]):
        self.fns = list(fns)
        self.r = len(self.fns)

    def eval_parts(self, t, v, needed=None):
        if needed is None:
            needed = [True] * self.r
        return [fn(t, v) if use else None for fn, use in zip(self.fns, needed)]


@dataclass(frozen=True)
class _StepPlan:
    A: tuple
    b: tuple
    c: tuple
    # per stage: which parts must be evaluated there at all
    needed: tuple
    # per stage i: nonzero couplings (j, k, a_ij^(k)) with j < i
    stage_terms: tuple
    # nonzero weights (j, k, b_j^(k))
    update_terms: tuple


@lru_cache(maxsize=None)
def _plan(tab: PRKTableau) -> _StepPlan:
    A = [[[float(a) for a in row] for row in Ak] for Ak in tab.A]
    b = [[float(x) for x in bk] for bk in tab.b]
    c = [float(x) for x in tab.c]
    r, s = tab.r, tab.s
    needed = [
        [
            b[k][j] != 0.0 or any(A[k][i][j] != 0.0 for i in range(j + 1, s))
            for k in range(r)
        ]
        for j in range(s)
    ]
    stage_terms = [
        [
            (j, k, A[k][i][j])
            for k in range(r)
            for j in range(i)
            if A[k][i][j] != 0.0
        ]
        for i in range(s)
    ]
    update_terms = [
        (j, k, b[k][j]) for k in range(r) for j in range(s) if b[k][j] != 0.0
    ]
    return _StepPlan(
        A=tuple(map(tuple, (tuple(map(tuple, Ak)) for Ak in A))),
        b=tuple(map(tuple, b)),
        c=tuple(c),
        needed=tuple(map(tuple, needed)),
        stage_terms=tuple(map(tuple, stage_terms)),
        update_terms=tuple(update_terms),
    )


def prk_step(tab: PRKTableau, parts, t: float, dt: float, u: np.ndarray) -> np.ndarray:
    """One step of the partitioned scheme from ``t`` to ``t + dt``.

    ``parts`` is either a decomposition object with ``eval_parts`` or a
    plain sequence of per-part evaluators; each part is evaluated at most
    once per stage, and stages whose coefficients are all zero for a part
    skip that evaluation entirely.
    """
    if not hasattr(parts, "eval_parts"):
        parts = _ListParts(parts)
    if parts.r != tab.r:
        raise ValueError(f"decomposition has {parts.r} parts, tableau expects {tab.r}")
    plan = _plan(tab)
    u = np.asarray(u, dtype=float)
    K: list[list] = [[None] * tab.r for _ in range(tab.s)]
    for i in range(tab.s):
        if i == 0:
            v = u
        else:
            acc = None
            for j, k, a in plan.stage_terms[i]:
                term = a * K[j][k]
                acc = term if acc is None else acc + term
            v = u if acc is None else u + dt * acc
        if any(plan.needed[i]):
            vals = parts.eval_parts(t + plan.c[i] * dt, v, list(plan.needed[i]))
            for k in range(tab.r):
                K[i][k] = vals[k]
    acc = None
    for j, k, w in plan.update_terms:
        term = w * K[j][k]
        acc = term if acc is None else acc + term
    unew = u if acc is None else u + dt * acc
    if not np.all(np.isfinite(unew)):
        raise IntegrationDiverged("non-finite state after step")
    return unew


@dataclass
class IntegrationRun:
    """A fixed-step integration job.

    ``dt`` must divide ``t_end - t0`` to an integer number of steps.  A
    dynamic decomposition (one with ``begin_step``) is rebuilt from the
    current state before every step.  ``mass_weights`` turns on the
    conservation trace; ``store_every > 0`` samples the state.
    """

    tableau: PRKTableau
    parts: object
    dt: float
    t_end: float
    t0: float = 0.0
    u0: np.ndarray | None = None
    mass_weights: np.ndarray | float | None = None
    store_every: int = 0

    @property
    def n_steps(self) -> int:
        span = self.t_end - self.t0
        n = round(span / self.dt)
        if n < 1 or abs(n * self.dt - span) > 1e-9 * max(abs(span), 1.0):
            raise ValueError("dt must divide the time span into whole steps")
        return n


@dataclass
class IntegrationResult:
    u: np.ndarray
    t: float
    n_steps: int
    mass_trace: list[float] = field(default_factory=list)
    samples: list[tuple[float, np.ndarray]] = field(default_factory=list)


def integrate(run: IntegrationRun) -> IntegrationResult:
    """March the scheme to ``t_end``; failures report the offending step."""
    u = np.asarray(run.u0, dtype=float)
    t = run.t0
    n_steps = run.n_steps
    mass_trace: list[float] = []
    samples: list[tuple[float, np.ndarray]] = []
    if run.mass_weights is not None:
        mass_trace.append(mass(run.mass_weights, u))
    dynamic = hasattr(run.parts, "begin_step")
    for n in range(n_steps):
        if dynamic:
            run.parts.begin_step(u)
        try:
            u = prk_step(run.tableau, run.parts, t, run.dt, u)
        except IntegrationDiverged as exc:
            raise IntegrationDiverged(
                f"integration diverged at step {n + 1}/{n_steps}, t={t:.6g}",
                step=n + 1,
                t=t,
            ) from exc
        t = run.t0 + (n + 1) * run.dt
        if run.mass_weights is not None:
            mass_trace.append(mass(run.mass_weights, u))
        if run.store_every and (n + 1) % run.store_every == 0:
            samples.append((t, u.copy()))
    return IntegrationResult(u=u, t=t, n_steps=n_steps, mass_trace=mass_trace, samples=samples)


# ----------------------------------------------------------------------
# reference integrator
# ----------------------------------------------------------------------

def _rk4(rhs, u0, t0, t_end, n_steps):
    u = np.asarray(u0, dtype=float)
    dt = (t_end - t0) / n_steps
    t = t0
    for n in range(n_steps):
        k1 = rhs(t, u)
        k2 = rhs(t + 0.5 * dt, u + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, u + 0.5 * dt * k2)
        k4 = rhs(t + dt, u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(u)):
            raise IntegrationDiverged("reference integration diverged", step=n + 1, t=t)
        t = t0 + (n + 1) * dt
    return u


def reference_integrate(
    problem,
    t_end: float,
    tol: float = 1e-10,
    u0: np.ndarray | None = None,
    t0: float = 0.0,
    dt0: float | None = None,
    max_rounds: int = 14,
) -> np.ndarray:
    """Temporal-error-free solution of the semi-discrete system.

    Classical fourth-order integration with step halving until two
    consecutive answers agree to ``tol`` in the maximum norm; the finer
    one is returned.
    """
    if u0 is None:
        u0 = problem.initial if problem.initial is not None else problem.exact(t0)
    if dt0 is None:
        speed = problem.max_speed
        if callable(speed):
            speed = speed(u0)
        speed = float(speed or 1.0)
        if hasattr(problem.grid, "dx"):
            width = float(np.min(problem.grid.dx))
        else:
            width = problem.grid.h
        dt0 = 0.4 * width / speed
    n = max(1, int(np.ceil((t_end - t0) / dt0)))
    coarse = _rk4(problem.rhs, u0, t0, t_end, n)
    for _ in range(max_rounds):
        n *= 2
        fine = _rk4(problem.rhs, u0, t0, t_end, n)
        if float(np.max(np.abs(fine - coarse))) < tol:
            return fine
        coarse = fine
    raise RuntimeError(f"reference integration did not converge to {tol:g}")
