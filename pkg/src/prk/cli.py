"""Command-line interface for the experiment harness and analysis tools."""

from __future__ import annotations

import inspect
import sys
from pathlib import Path

import click
import numpy as np

from .decomposition import (
    DynamicCellSplit,
    FluxPartition,
    FluxPartition2D,
    cell_split,
    flux_split,
    flux_split_2d,
    parse_partition_spec,
)
from .harness import EXPERIMENTS, run_wnorm_study, shock_position
from .spatial import advection1d_weno5, advection2d, burgers_llf, norms
from .stepper import IntegrationRun, integrate as run_integration
from .tableau import (
    builtin_names,
    builtin_tableau,
    tableau_from_text,
    tableau_properties,
    tableau_to_text,
)


def _parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return tuple(_parse_value(v) for v in raw.split(","))
    low = raw.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    return raw


def _load_config(path: str | None) -> dict:
    """Plain ``key=value`` overrides, one per line, ``#`` comments allowed."""
    if not path:
        return {}
    overrides = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.ClickException(f"bad config line (need key=value): {line!r}")
        key, _, val = line.partition("=")
        overrides[key.strip()] = _parse_value(val)
    return overrides


@click.group()
def main():
    """Partitioned / multirate Runge-Kutta experiments."""


@main.command("run")
@click.argument("experiment", type=click.Choice(sorted(EXPERIMENTS)))
@click.option("--out", "outdir", default="results", show_default=True,
              help="Directory for the CSV report.")
@click.option("--schemes", default=None,
              help="Comma-separated scheme names overriding the default set.")
@click.option("--quick", is_flag=True, help="Halve resolutions (CI-sized run).")
@click.option("--config", "config_path", default=None,
              help="key=value file with extra overrides for the experiment.")
def run_cmd(experiment, outdir, schemes, quick, config_path):
    """Run one experiment and write its CSV report.

    Exits nonzero when any of the experiment's built-in assertions fail.
    """
    kwargs = _load_config(config_path)
    for key in ("ms", "ns", "nus", "schemes"):
        if key in kwargs and not isinstance(kwargs[key], tuple):
            kwargs[key] = (kwargs[key],)
    if "schemes" in kwargs:
        kwargs["schemes"] = tuple(str(s).upper() for s in kwargs["schemes"])
    if schemes:
        kwargs["schemes"] = tuple(s.strip().upper() for s in schemes.split(","))
    if quick:
        kwargs["quick"] = True
    fn = EXPERIMENTS[experiment]
    sig = inspect.signature(fn)
    try:
        has_var_kw = any(
            p.kind is inspect.Parameter.VAR_KEYWORD for p in sig.parameters.values()
        )
        unknown = [k for k in kwargs if k not in sig.parameters and not has_var_kw]
    except (TypeError, ValueError):
        unknown = []
    if unknown:
        raise click.ClickException(
            f"unknown option(s) for {experiment}: {', '.join(unknown)}"
        )
    report = fn(**kwargs)
    path = report.write(outdir)
    click.echo(report.summary())
    click.echo(f"wrote {path}")
    if not report.passed:
        sys.exit(1)


@main.command("analyze")
@click.option("--schemes", default="TW2,CS2", show_default=True)
@click.option("--m", "ms", default="20,40,80,160,320,640", show_default=True,
              help="Comma-separated resolutions.")
@click.option("--nu", "nus", default="0.5,0.75,0.9,0.95,1.0", show_default=True,
              help="Comma-separated Courant numbers.")
@click.option("--out", "outfile", default=None,
              help="CSV output file (default: stdout).")
def analyze_cmd(schemes, ms, nus, outfile):
    """W-norm and stability analysis on the nonuniform upwind test grid.

    Emits CSV with columns (scheme, m, nu, norm_W, cond_rTe, stab1, stab2).
    """
    schemes_t = tuple(s.strip().upper() for s in schemes.split(","))
    ms_t = tuple(int(v) for v in ms.split(","))
    nus_t = tuple(float(v) for v in nus.split(","))
    report = run_wnorm_study(schemes=schemes_t, ms=ms_t, nus=nus_t)
    text = report.to_csv()
    if outfile:
        Path(outfile).write_text(text)
        click.echo(f"wrote {outfile}")
    else:
        click.echo(text, nl=False)


_PROBLEM_DEFAULTS = {
    # problem: (t_end, default partition spec)
    "adv1d": (1.0, "refined:(x>=0.125)&(x<=0.375)|(x>=0.625)&(x<=0.875)"),
    "burgers": (0.5, "dynamic:burgers:threshold=0.125"),
    "adv2d": (1.0 / 3.0, "coarse:abs(x-0.5)+abs(y-0.5)<=1/3"),
}


@main.command("integrate")
@click.option("--problem", type=click.Choice(sorted(_PROBLEM_DEFAULTS)), required=True)
@click.option("--m", "m", type=int, required=True,
              help="Cells (per direction for adv2d).")
@click.option("--nu", type=float, default=0.5, show_default=True,
              help="Courant number fixing the step size.")
@click.option("--scheme", default="TW2", show_default=True)
@click.option("--decomposition", "kind", type=click.Choice(["cell", "flux"]),
              default="cell", show_default=True)
@click.option("--partition", "partition_spec", default=None,
              help="Partition spec (see docs); defaults to the problem's standard one.")
@click.option("--t-end", type=float, default=None,
              help="Final time (defaults to the problem's standard value).")
@click.option("--out", "outfile", default=None,
              help="Write the final state as CSV.")
def integrate_cmd(problem, m, nu, scheme, kind, partition_spec, t_end, outfile):
    """Integrate one problem with one scheme and report the errors."""
    t_default, spec_default = _PROBLEM_DEFAULTS[problem]
    t_end = t_default if t_end is None else t_end
    spec = partition_spec or spec_default

    if problem == "adv1d":
        prob = advection1d_weno5(m)
        dt = nu / m
    elif problem == "burgers":
        prob = burgers_llf(m)
        dt = nu / m
    else:
        prob = advection2d(m)
        dt = nu * prob.grid.h / (2.0 * np.pi)
    n_steps = max(1, int(np.ceil(t_end / dt)))
    dt = t_end / n_steps

    parsed = parse_partition_spec(spec, prob.grid)
    if callable(parsed):
        if kind == "flux":
            raise click.ClickException("dynamic partitions support cell splitting only")
        parts = DynamicCellSplit(prob.rhs, parsed)
    elif kind == "cell":
        parts = cell_split(prob.rhs, parsed)
    elif problem == "adv2d":
        # rebuild the region test on face midpoints from the partition
        # spec, which must be geometric for 2D flux splitting
        body = spec.split(":", 1)[1] if spec.startswith(("coarse:", "refined:")) else spec
        coarse_sel = spec.startswith("coarse:")
        from .decomposition import _eval_predicate  # shared safe evaluator

        def coarse_pred(px, py):
            sel = _eval_predicate(body, {"x": px, "y": py})
            return sel if coarse_sel else ~sel

        fp = FluxPartition2D.from_coarse_predicate(prob.grid, coarse_pred)
        parts = flux_split_2d(prob.flux, fp)
    else:
        fp = FluxPartition.from_cells(parsed, prob.grid.dx, periodic=prob.grid.periodic)
        parts = flux_split(prob.flux, fp)

    weights = prob.grid.h ** 2 if problem == "adv2d" else prob.grid.dx
    res = run_integration(IntegrationRun(
        builtin_tableau(scheme), parts, dt=dt, t_end=t_end,
        u0=prob.initial, mass_weights=weights,
    ))
    drift = abs(res.mass_trace[-1] - res.mass_trace[0])
    click.echo(f"{problem} m={m} scheme={scheme} {kind}-based: "
               f"{n_steps} steps of dt={dt:.3e}")
    click.echo(f"mass drift |m(T) - m(0)| = {drift:.3e}")
    if prob.exact is not None:
        err = res.u - prob.exact(t_end)
        n = norms(err, weights)
        click.echo(f"error vs exact: linf={n['linf']:.6e}  l1={n['l1']:.6e}")
    if problem == "burgers":
        pos = shock_position(prob.grid.x, res.u)
        click.echo(f"shock position {pos:.6f} (target 0.75, "
                   f"{abs(pos - 0.75) * m:.1f} cells off)")
    if outfile:
        with open(outfile, "w") as fh:
            if problem == "adv2d":
                fh.write("x,y,u\n")
                for iy, yv in enumerate(prob.grid.y):
                    for ix, xv in enumerate(prob.grid.x):
                        fh.write(f"{xv!r},{yv!r},{res.u[iy, ix]!r}\n")
            else:
                fh.write("x,u\n")
                for xv, uv in zip(prob.grid.x, res.u):
                    fh.write(f"{xv!r},{uv!r}\n")
        click.echo(f"wrote {outfile}")


@main.group("tableau")
def tableau_group():
    """Inspect or validate coefficient tableaus."""


@tableau_group.command("show")
@click.argument("name", type=click.Choice(sorted(builtin_names()),
                                          case_sensitive=False))
def tableau_show(name):
    """Print a builtin tableau in the text exchange format, plus properties."""
    t = builtin_tableau(name)
    click.echo(tableau_to_text(t), nl=False)
    p = tableau_properties(t)
    click.echo(f"# order={p.classical_order} stage_order={p.stage_order} "
               f"conservative={p.conservative} "
               f"internally_consistent={p.internally_consistent}")


@tableau_group.command("check")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def tableau_check(file):
    """Parse a tableau file and report its structural properties."""
    t = tableau_from_text(Path(file).read_text(), name=Path(file).stem)
    p = tableau_properties(t)
    click.echo(f"{t.name or 'tableau'}: r={t.r} s={t.s} order={p.classical_order} "
               f"stage_order={p.stage_order} conservative={p.conservative} "
               f"internally_consistent={p.internally_consistent}")


if __name__ == "__main__":
    main()
