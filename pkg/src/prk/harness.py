"""Experiment driver: convergence tables, error profiles, shock tracking,
W-norm sweeps and the 2D rotation study, all emitted as CSV reports.

Every experiment is deterministic; rerunning produces byte-identical CSV.
Wall-clock timings are kept on the in-memory rows but never serialized.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import LinearSplitting, solve_W, stability_check
from .decomposition import (
    CellPartition,
    DynamicCellSplit,
    FluxPartition,
    FluxPartition2D,
    burgers_dynamic_partition,
    cell_split,
    flux_split,
    flux_split_2d,
    trivial_parts,
)
from .spatial import advection1d_weno5, advection2d, burgers_llf, norms, upwind1d
from .stepper import (
    IntegrationDiverged,
    IntegrationRun,
    integrate,
    reference_integrate,
)
from .tableau import builtin_tableau

__all__ = [
    "Check",
    "ExperimentReport",
    "estimate_order",
    "shock_position",
    "run_table1",
    "run_table2",
    "run_error_profile",
    "run_burgers_shock",
    "run_wnorm_study",
    "run_adv2d",
    "EXPERIMENTS",
    "run_experiment",
]

# refined region of the 1D smooth advection tests
SMOOTH_INTERVALS = ((0.125, 0.375), (0.625, 0.875))
# single asymmetric interval for the conservation dichotomy; the
# symmetric pair above makes the region boundary fluxes of the exact
# sin^2 profile cancel to round-off, hiding the weight mismatch
DICHOTOMY_INTERVALS = ((0.125, 0.375),)

# published reference values (max norm, L1) per scheme and resolution
TABLE1_ERRORS = {
    "CS2": {
        100: (8.22e-4, 2.85e-4), 200: (2.75e-4, 7.81e-5),
        400: (1.46e-4, 2.09e-5), 800: (8.37e-5, 5.73e-6),
    },
    "TW2": {
        100: (3.12e-4, 1.98e-4), 200: (8.04e-5, 5.12e-5),
        400: (2.02e-5, 1.28e-5), 800: (5.05e-6, 3.21e-6),
    },
    "SH2": {
        100: (3.13e-4, 1.99e-4), 200: (8.06e-5, 5.13e-5),
        400: (2.02e-5, 1.28e-5), 800: (5.05e-6, 3.21e-6),
    },
}
TABLE1_ORDERS = {"CS2": (1, 2), "TW2": (2, 2), "SH2": (2, 2)}

TABLE2_ERRORS = {
    "CS2": {
        100: (3.98e-2, 4.43e-3), 200: (3.65e-2, 1.48e-3),
        400: (3.54e-2, 5.12e-4), 800: (3.52e-2, 2.09e-4),
    },
    "TW2": {
        100: (8.20e-4, 2.45e-4), 200: (4.20e-4, 6.57e-5),
        400: (2.45e-4, 1.80e-5), 800: (1.31e-4, 5.08e-6),
    },
    "SH2": {
        100: (3.73e-4, 2.07e-4), 200: (1.30e-4, 5.29e-5),
        400: (6.69e-5, 1.36e-5), 800: (3.77e-5, 3.49e-6),
    },
}
TABLE2_ORDERS = {"CS2": (0, 1), "TW2": (1, 2), "SH2": (1, 2)}


@dataclass(frozen=True)
class Check:
    label: str
    ok: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    """Rows plus metadata plus the experiment's built-in assertions."""

    name: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def add(self, **row) -> None:
        self.rows.append(row)

    def check(self, label: str, ok: bool, detail: str = "") -> None:
        self.checks.append(Check(label, bool(ok), detail))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# experiment = {self.name}\n")
        for key, val in self.metadata.items():
            buf.write(f"# {key} = {_fmt(val)}\n")
        cols = [c for c in self.columns if c != "runtime"]
        buf.write(",".join(cols) + "\n")
        for row in self.rows:
            buf.write(",".join(_fmt(row.get(c, "")) for c in cols) + "\n")
        return buf.getvalue()

    def write(self, outdir) -> Path:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / f"{self.name}.csv"
        path.write_text(self.to_csv())
        return path

    def summary(self) -> str:
        lines = [f"{self.name}: {len(self.rows)} rows"]
        for c in self.checks:
            mark = "PASS" if c.ok else "FAIL"
            lines.append(f"  [{mark}] {c.label}" + (f"  ({c.detail})" if c.detail else ""))
        return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (tuple, list)):
        return " ".join(_fmt(v) for v in x)
    return str(x)


def estimate_order(errors) -> dict:
    """Convergence orders from an error-versus-resolution table.

    ``errors`` maps resolution to error (dict or pairs).  Returns the
    pairwise ``log2`` ratios between consecutive resolutions and the
    least-squares slope across all of them.
    """
    items = sorted(errors.items() if isinstance(errors, dict) else errors)
    if len(items) < 2:
        raise ValueError("order estimation needs at least two resolutions")
    ms = np.array([m for m, _ in items], dtype=float)
    es = np.array([e for _, e in items], dtype=float)
    if np.any(es <= 0):
        pairwise = [0.0] * (len(items) - 1)
        return {"pairwise": pairwise, "slope": 0.0}
    pairwise = list(np.log2(es[:-1] / es[1:]) / np.log2(ms[1:] / ms[:-1]))
    slope = float(-np.polyfit(np.log2(ms), np.log2(es), 1)[0])
    return {"pairwise": [float(p) for p in pairwise], "slope": slope}


def shock_position(x: np.ndarray, u: np.ndarray, level: float = 0.5) -> float:
    """Downward level crossing of the profile, linearly interpolated."""
    down = np.where((u[:-1] >= level) & (u[1:] < level))[0]
    if down.size == 0:
        raise ValueError("no downward crossing found")
    i = int(down[-1])
    return float(x[i] + (u[i] - level) * (x[i + 1] - x[i]) / (u[i] - u[i + 1]))


# ----------------------------------------------------------------------
# 1D smooth advection tables
# ----------------------------------------------------------------------

def _smooth_parts(problem, kind: str, intervals):
    part = CellPartition.from_intervals(problem.grid.x, intervals)
    if kind == "cell":
        return cell_split(problem.rhs, part)
    if kind == "flux":
        fp = FluxPartition.from_cells(part, problem.grid.dx, periodic=True)
        return flux_split(problem.flux, fp)
    raise ValueError(f"unknown decomposition kind {kind!r}")


def _run_smooth(scheme: str, m: int, nu: float, kind: str, t_end: float = 1.0):
    problem = advection1d_weno5(m)
    parts = _smooth_parts(problem, kind, SMOOTH_INTERVALS)
    t0 = time.perf_counter()
    res = integrate(
        IntegrationRun(
            builtin_tableau(scheme), parts, dt=nu / m, t_end=t_end,
            u0=problem.initial, mass_weights=problem.grid.dx,
        )
    )
    runtime = time.perf_counter() - t0
    err = res.u - problem.exact(t_end)
    n = norms(err, problem.grid.dx)
    drift = abs(res.mass_trace[-1] - res.mass_trace[0])
    return n["linf"], n["l1"], drift, runtime, res


def _table_experiment(
    name: str,
    kind: str,
    schemes,
    ms,
    nu: float,
    reference_errors,
    reference_orders,
) -> ExperimentReport:
    report = ExperimentReport(
        name=name,
        columns=[
            "scheme", "decomposition", "m", "nu", "err_linf", "err_l1",
            "order_linf", "order_l1", "mass_drift", "runtime",
        ],
        metadata={
            "problem": "adv1d",
            "T": 1.0,
            "nu": nu,
            "partition": "x in [1/8,3/8] u [5/8,7/8]",
            "decomposition": kind,
        },
    )
    for scheme in schemes:
        errs_linf, errs_l1 = {}, {}
        prev = None
        for m in ms:
            linf, l1, drift, runtime, _ = _run_smooth(scheme, m, nu, kind)
            errs_linf[m], errs_l1[m] = linf, l1
            row = {
                "scheme": scheme, "decomposition": kind, "m": m, "nu": nu,
                "err_linf": linf, "err_l1": l1, "order_linf": "",
                "order_l1": "", "mass_drift": drift, "runtime": runtime,
            }
            if prev is not None:
                pm, plinf, pl1 = prev
                span = np.log2(m / pm)
                row["order_linf"] = float(np.log2(plinf / linf) / span)
                row["order_l1"] = float(np.log2(pl1 / l1) / span)
            prev = (m, linf, l1)
            report.add(**row)
            if kind == "flux":
                rel = drift / 0.5
                report.check(
                    f"{scheme} m={m} flux mass drift <= 1e-10 relative",
                    rel <= 1e-10,
                    f"drift {rel:.2e}",
                )
            ref = reference_errors.get(scheme, {}).get(m)
            if ref is not None:
                ok = 0.5 <= linf / ref[0] <= 2.0 and 0.5 <= l1 / ref[1] <= 2.0
                report.check(
                    f"{scheme} m={m} errors within factor 2 of published",
                    ok,
                    f"linf ratio {linf / ref[0]:.2f}, l1 ratio {l1 / ref[1]:.2f}",
                )
        # the published orders are asymptotic over the published
        # resolutions (the first doubling interval alone rounds high);
        # runs covering fewer than three of them skip the check
        published = [m for m in errs_linf if m in reference_errors.get(scheme, {})]
        if scheme in reference_orders and len(published) >= 3:
            slope_inf = estimate_order({m: errs_linf[m] for m in published})["slope"]
            slope_l1 = estimate_order({m: errs_l1[m] for m in published})["slope"]
            want = reference_orders[scheme]
            got = (round(slope_inf), round(slope_l1))
            report.check(
                f"{scheme} rounded orders (max, L1) = {want}",
                got == want,
                f"slopes ({slope_inf:.2f}, {slope_l1:.2f})",
            )
    return report


def run_table1(schemes=("CS2", "TW2", "SH2"), ms=(100, 200, 400, 800), nu=0.5,
               quick=False) -> ExperimentReport:
    """Smooth-advection convergence, cell-based decomposition."""
    if quick:
        ms = tuple(m for m in ms if m <= max(ms) // 2)
    return _table_experiment("table1", "cell", schemes, ms, nu,
                             TABLE1_ERRORS, TABLE1_ORDERS)


def run_table2(schemes=("CS2", "TW2", "SH2"), ms=(100, 200, 400, 800), nu=0.5,
               quick=False) -> ExperimentReport:
    """Smooth-advection convergence, flux-based decomposition."""
    if quick:
        ms = tuple(m for m in ms if m <= max(ms) // 2)
    return _table_experiment("table2", "flux", schemes, ms, nu,
                             TABLE2_ERRORS, TABLE2_ORDERS)


# ----------------------------------------------------------------------
# pointwise error profile
# ----------------------------------------------------------------------

def run_error_profile(schemes=("CS2", "TW2"), m=400, nu=0.5,
                      kind="cell", quick=False) -> ExperimentReport:
    """Error versus position at the final time of the smooth test."""
    if quick:
        m = m // 2
    report = ExperimentReport(
        name="fig1",
        columns=["scheme", "x", "error"],
        metadata={"problem": "adv1d", "T": 1.0, "m": m, "nu": nu,
                  "decomposition": kind},
    )
    interface_points = [p for iv in SMOOTH_INTERVALS for p in iv]
    for scheme in schemes:
        problem = advection1d_weno5(m)
        parts = _smooth_parts(problem, kind, SMOOTH_INTERVALS)
        res = integrate(
            IntegrationRun(builtin_tableau(scheme), parts, dt=nu / m,
                           t_end=1.0, u0=problem.initial)
        )
        err = res.u - problem.exact(1.0)
        for xj, ej in zip(problem.grid.x, err):
            report.add(scheme=scheme, x=float(xj), error=float(ej))
        abs_err = np.abs(err)
        if scheme == "CS2":
            worst = np.argsort(abs_err)[-4:]
            dist = [
                min(abs(problem.grid.x[j] - p) for p in interface_points) * m
                for j in worst
            ]
            report.check(
                "CS2 four largest errors within 5 cells of an interface",
                max(dist) <= 5.0,
                f"cell distances {sorted(round(d, 1) for d in dist)}",
            )
        if scheme == "TW2":
            ratio = abs_err.max() / np.median(abs_err)
            report.check(
                "TW2 profile has no interface spike above 3x median",
                ratio <= 3.0,
                f"max/median {ratio:.2f}",
            )
    return report


# ----------------------------------------------------------------------
# Burgers shock tracking
# ----------------------------------------------------------------------

def run_burgers_shock(schemes=("CS2", "TW2", "SH2"), m=2000, threshold=0.125,
                      include_reference=True, quick=False) -> ExperimentReport:
    """Shock location at T = 1/2 with the dynamic (shock-tracking) partition."""
    if quick:
        m = m // 2
    report = ExperimentReport(
        name="fig2",
        columns=["scheme", "m", "shock_position", "displacement_cells",
                 "mass_drift", "runtime"],
        metadata={"problem": "burgers", "T": 0.5, "m": m,
                  "partition": f"dynamic:burgers:threshold={threshold}"},
    )

    def add_row(scheme, u, runtime, drift):
        pos = shock_position(problem.grid.x, u)
        cells = abs(pos - 0.75) * m
        report.add(scheme=scheme, m=m, shock_position=pos,
                   displacement_cells=cells, mass_drift=drift, runtime=runtime)
        return cells

    for scheme in schemes:
        problem = burgers_llf(m)
        parts = DynamicCellSplit(
            problem.rhs, lambda u: burgers_dynamic_partition(u, threshold)
        )
        t0 = time.perf_counter()
        res = integrate(
            IntegrationRun(builtin_tableau(scheme), parts, dt=1.0 / m,
                           t_end=0.5, u0=problem.initial,
                           mass_weights=problem.grid.dx)
        )
        runtime = time.perf_counter() - t0
        drift = abs(res.mass_trace[-1] - res.mass_trace[0])
        cells = add_row(scheme, res.u, runtime, drift)
        if scheme == "CS2":
            report.check("CS2 shock within 5 cells of x = 3/4", cells <= 5.0,
                         f"{cells:.1f} cells")
        else:
            # non-conservative schemes drift by an m-independent distance;
            # 0.005 is ten cells at the reference resolution m = 2000
            off = cells / m
            report.check(f"{scheme} shock displaced by >= 0.005",
                         off >= 0.005, f"{off:.4f} ({cells:.1f} cells)")
    if include_reference:
        problem = burgers_llf(m)
        t0 = time.perf_counter()
        res = integrate(
            IntegrationRun(builtin_tableau("ETR2"), trivial_parts(problem.rhs),
                           dt=0.5 / m, t_end=0.5, u0=problem.initial,
                           mass_weights=problem.grid.dx)
        )
        runtime = time.perf_counter() - t0
        drift = abs(res.mass_trace[-1] - res.mass_trace[0])
        cells = add_row("single-rate", res.u, runtime, drift)
        report.check("single-rate shock within 3 cells of x = 3/4",
                     cells <= 3.0, f"{cells:.1f} cells")
    return report


# ----------------------------------------------------------------------
# W-norm study
# ----------------------------------------------------------------------

def wnorm_point(scheme: str, m: int, nu: float):
    """One (scheme, m, nu) sample of the order-reduction matrix study.

    Upwind inflow advection on the two-block nonuniform grid: the middle
    half of the indices is refined with half the cell width, coarse width
    ``h = 4/(3m)``, time step ``nu * h``.
    """
    h = 4.0 / (3.0 * m)
    refined = np.zeros(m, dtype=bool)
    refined[m // 4 : (3 * m) // 4] = True
    dx = np.where(refined, 0.5 * h, h)
    problem = upwind1d(dx=dx, boundary="inflow")
    part = CellPartition.two_region(refined)
    ls = LinearSplitting.cell_based(problem.linear_matrix, nu * h, part)
    w = solve_W(builtin_tableau(scheme), ls, part)
    stab = stability_check(ls)
    return w, stab


def run_wnorm_study(schemes=("TW2", "CS2"), ms=(20, 40, 80, 160, 320, 640),
                    nus=(0.5, 0.75, 0.9, 0.95, 1.0), quick=False) -> ExperimentReport:
    """Norm of W versus resolution for several Courant numbers."""
    if quick:
        ms = tuple(m for m in ms if m <= max(ms) // 2)
    report = ExperimentReport(
        name="fig3",
        columns=["scheme", "m", "nu", "norm_W", "cond_rTe", "stab1", "stab2"],
        metadata={"problem": "upwind1d nonuniform", "partition": "middle half refined",
                  "h": "4/(3m)"},
    )
    table: dict[tuple[str, float], dict[int, float]] = {}
    for scheme in schemes:
        for nu in nus:
            for m in ms:
                w, stab = wnorm_point(scheme, m, nu)
                report.add(scheme=scheme, m=m, nu=nu, norm_W=w.norm_w,
                           cond_rTe=w.cond_rTe, stab1=stab.stab1, stab2=stab.stab2)
                table.setdefault((scheme, nu), {})[m] = w.norm_w
    for scheme in schemes:
        if scheme != "TW2":
            continue
        for nu, lo, hi in ((0.5, 0.0, 1.2), (1.0, 1.6, 2.4)):
            vals = table.get((scheme, nu))
            if not vals:
                continue
            pairs = [
                (m, 2 * m) for m in vals if 2 * m in vals and m >= 80
            ]
            ratios = [vals[m2] / vals[m1] for m1, m2 in pairs]
            if not ratios:
                continue
            ok = all(lo <= r <= hi for r in ratios)
            report.check(
                f"TW2 nu={nu} doubling ratios in [{lo}, {hi}] for m >= 80",
                ok,
                "ratios " + " ".join(f"{r:.2f}" for r in ratios),
            )
    return report


# ----------------------------------------------------------------------
# 2D rotation study
# ----------------------------------------------------------------------

def _adv2d_partition_cell(problem):
    X, Y = np.meshgrid(problem.grid.x, problem.grid.y)
    coarse = np.abs(X - 0.5) + np.abs(Y - 0.5) <= 1.0 / 3.0
    return CellPartition.two_region(~coarse)


def _adv2d_parts(problem, kind: str):
    if kind == "cell":
        return cell_split(problem.rhs, _adv2d_partition_cell(problem))
    if kind == "flux":
        fp = FluxPartition2D.from_coarse_predicate(
            problem.grid, lambda x, y: np.abs(x - 0.5) + np.abs(y - 0.5) <= 1.0 / 3.0
        )
        return flux_split_2d(problem.flux, fp)
    raise ValueError(f"unknown decomposition kind {kind!r}")


def run_adv2d(kind="cell", ns=(50, 100, 200), nus=None,
              schemes=("TW2", "CS2", "SH2"), reference_tol=1e-10,
              quick=False) -> ExperimentReport:
    """Rotating-profile errors against the temporally exact semi-discrete
    solution, with the global half-step trapezoidal run as baseline."""
    if quick:
        ns = tuple(n // 2 for n in ns if n // 2 >= 20)
        reference_tol = max(reference_tol, 1e-9)
    if nus is None:
        nus = tuple(np.linspace(0.5, 2.0, 8))
    t_end = 1.0 / 3.0
    report = ExperimentReport(
        name=f"adv2d-{kind}",
        columns=["scheme", "decomposition", "n", "nu", "dt", "err_linf",
                 "status", "mass_drift", "runtime"],
        metadata={"problem": "adv2d", "T": t_end, "decomposition": kind,
                  "partition": "abs(x-1/2)+abs(y-1/2) <= 1/3 coarse"},
    )
    errs: dict[tuple[str, float, int], float] = {}
    for n in ns:
        problem = advection2d(n)
        uref = reference_integrate(problem, t_end, tol=reference_tol)
        parts = _adv2d_parts(problem, kind)
        area = problem.grid.h ** 2
        for scheme in ("ETR2x2",) + tuple(schemes):
            for nu in nus:
                dt = nu * problem.grid.h / (2.0 * np.pi)
                n_steps = max(1, int(np.ceil(t_end / dt)))
                dt = t_end / n_steps
                t0 = time.perf_counter()
                try:
                    if scheme == "ETR2x2":
                        res = integrate(IntegrationRun(
                            builtin_tableau("ETR2"), trivial_parts(problem.rhs),
                            dt=0.5 * dt, t_end=t_end, u0=problem.initial,
                            mass_weights=area))
                    else:
                        res = integrate(IntegrationRun(
                            builtin_tableau(scheme), parts, dt=dt, t_end=t_end,
                            u0=problem.initial, mass_weights=area))
                    err = float(np.max(np.abs(res.u - uref)))
                    drift = abs(res.mass_trace[-1] - res.mass_trace[0])
                    status = "ok"
                except IntegrationDiverged as exc:
                    err, drift, status = float("inf"), float("nan"), f"diverged@{exc.step}"
                runtime = time.perf_counter() - t0
                errs[(scheme, nu, n)] = err
                report.add(scheme=scheme, decomposition=kind, n=n, nu=float(nu),
                           dt=dt, err_linf=err, status=status,
                           mass_drift=drift, runtime=runtime)
    # ordinal checks against the baseline and across grids; both claims are
    # asymptotic and only hold from about n = 50 upward
    asym = [n for n in ns if n >= 50]
    for scheme in schemes:
        if scheme in ("TW2", "SH2"):
            if kind == "cell":
                ratios = [
                    errs[(scheme, nu, n)] / errs[("ETR2x2", nu, n)]
                    for nu in nus for n in asym
                    if np.isfinite(errs[(scheme, nu, n)])
                    and np.isfinite(errs[("ETR2x2", nu, n)])
                ]
                if ratios:
                    report.check(
                        f"{scheme} tracks the global half-step baseline (<= 2.2)",
                        max(ratios) <= 2.2,
                        f"worst ratio {max(ratios):.2f}",
                    )
                else:
                    report.check(
                        f"{scheme} tracks the global half-step baseline (<= 2.2)",
                        True, "skipped: all grids pre-asymptotic (n < 50)",
                    )
            else:
                slopes = []
                for nu in nus:
                    for n1, n2 in zip(ns[:-1], ns[1:]):
                        if n1 < 50:
                            continue
                        e1, e2 = errs[(scheme, nu, n1)], errs[(scheme, nu, n2)]
                        if np.isfinite(e1) and np.isfinite(e2) and e2 > 0:
                            slopes.append(np.log2(e1 / e2) / np.log2(n2 / n1))
                if slopes:
                    mean = float(np.mean(slopes))
                    report.check(
                        f"{scheme} flux-based order about one under grid halving",
                        0.5 <= mean <= 1.5,
                        f"mean slope {mean:.2f}",
                    )
                else:
                    report.check(
                        f"{scheme} flux-based order about one under grid halving",
                        True, "skipped: all grids pre-asymptotic (n < 50)",
                    )
    if "CS2" in schemes and "TW2" in schemes and len(ns) >= 2 and kind == "cell":
        nu0 = nus[0]
        r_first = errs[("CS2", nu0, ns[0])] / errs[("TW2", nu0, ns[0])]
        r_last = errs[("CS2", nu0, ns[-1])] / errs[("TW2", nu0, ns[-1])]
        report.check(
            "CS2/TW2 error ratio grows as the grid refines",
            r_last > r_first,
            f"ratio {r_first:.1f} -> {r_last:.1f}",
        )
    return report


# ----------------------------------------------------------------------
# registry
# ----------------------------------------------------------------------

EXPERIMENTS = {
    "table1": run_table1,
    "table2": run_table2,
    "fig1": run_error_profile,
    "fig2": run_burgers_shock,
    "fig3": run_wnorm_study,
    "adv2d-cell": lambda **kw: run_adv2d(kind="cell", **kw),
    "adv2d-flux": lambda **kw: run_adv2d(kind="flux", **kw),
}


def run_experiment(name: str, **kwargs) -> ExperimentReport:
    if name not in EXPERIMENTS:
        raise KeyError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    return EXPERIMENTS[name](**kwargs)
