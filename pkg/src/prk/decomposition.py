"""Cell-based and flux-based decompositions of semi-discrete operators.

A cell partition assigns every unknown to exactly one region and splits
the right-hand side by masking components; a flux partition assigns every
interface to exactly one region so each split part telescopes and mass is
conserved stage by stage.  Region 1 carries the coarse step of a
multirate method, region 2 the refined one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "CellPartition",
    "FluxPartition",
    "FluxPartition2D",
    "cell_split",
    "flux_split",
    "flux_split_2d",
    "trivial_parts",
    "DynamicCellSplit",
    "burgers_dynamic_partition",
    "mass",
    "parse_partition_spec",
]


def _check_masks(masks: tuple[np.ndarray, ...]) -> None:
    if not masks:
        raise ValueError("need at least one mask")
    shape = masks[0].shape
    cover = np.zeros(shape, dtype=int)
    for mk in masks:
        if mk.shape != shape:
            raise ValueError("all masks must share one shape")
        cover += mk.astype(int)
    if not np.all(cover == 1):
        raise ValueError("masks must be pairwise disjoint and cover every index")


@dataclass(frozen=True)
class CellPartition:
    """Disjoint boolean region masks over the state array."""

    masks: tuple[np.ndarray, ...]

    def __post_init__(self):
        _check_masks(self.masks)

    @property
    def r(self) -> int:
        return len(self.masks)

    @property
    def shape(self):
        return self.masks[0].shape

    @classmethod
    def single(cls, shape) -> "CellPartition":
        return cls((np.ones(shape, dtype=bool),))

    @classmethod
    def two_region(cls, refined: np.ndarray) -> "CellPartition":
        """Coarse region 1 is the complement of the ``refined`` mask."""
        refined = np.asarray(refined, dtype=bool)
        return cls((~refined, refined))

    @classmethod
    def from_intervals(cls, x: np.ndarray, intervals) -> "CellPartition":
        """Refine where the coordinate lies in any closed interval."""
        refined = np.zeros_like(x, dtype=bool)
        for lo, hi in intervals:
            refined |= (x >= lo) & (x <= hi)
        return cls.two_region(refined)


@dataclass(frozen=True)
class FluxPartition:
    """Disjoint region masks over the ``m + 1`` interfaces of a 1D grid.

    Each interface belongs to the region of the cell on its right; the
    rightmost interface wraps to cell 0 on periodic grids and falls to
    the last cell otherwise.
    """

    masks: tuple[np.ndarray, ...]
    dx: np.ndarray
    periodic: bool

    def __post_init__(self):
        _check_masks(self.masks)
        if self.masks[0].shape != (self.dx.size + 1,):
            raise ValueError("flux masks must have length m + 1")
        if self.periodic:
            for mk in self.masks:
                if mk[0] != mk[-1]:
                    raise ValueError(
                        "periodic flux masks must agree on the wrapped interface"
                    )

    @property
    def r(self) -> int:
        return len(self.masks)

    @classmethod
    def from_cells(cls, cells: CellPartition, dx, periodic: bool) -> "FluxPartition":
        dx = np.asarray(dx, dtype=float)
        m = dx.size
        masks = []
        for mk in cells.masks:
            if mk.shape != (m,):
                raise ValueError("cell masks must match the grid size")
            jm = np.empty(m + 1, dtype=bool)
            jm[:m] = mk
            jm[m] = mk[0] if periodic else mk[m - 1]
            masks.append(jm)
        return cls(tuple(masks), dx=dx, periodic=periodic)


@dataclass(frozen=True)
class FluxPartition2D:
    """Region masks for x-faces ``(n, n+1)`` and y-faces ``(n+1, n)``."""

    xmasks: tuple[np.ndarray, ...]
    ymasks: tuple[np.ndarray, ...]
    h: float

    def __post_init__(self):
        _check_masks(self.xmasks)
        _check_masks(self.ymasks)

    @property
    def r(self) -> int:
        return len(self.xmasks)

    @classmethod
    def from_coarse_predicate(cls, grid, predicate) -> "FluxPartition2D":
        """Two regions; a face joins region 1 when the predicate holds at
        its midpoint."""
        edges = grid.edges
        Xf, Yf = np.meshgrid(edges, grid.y)
        xm1 = np.asarray(predicate(Xf, Yf), dtype=bool)
        Xg, Yg = np.meshgrid(grid.x, edges)
        ym1 = np.asarray(predicate(Xg, Yg), dtype=bool)
        return cls((xm1, ~xm1), (ym1, ~ym1), h=grid.h)


# ----------------------------------------------------------------------
# split right-hand sides
# ----------------------------------------------------------------------

class _PartsBase:
    """Sequence of per-region evaluators with shared-work stage evaluation."""

    r: int

    def __len__(self) -> int:
        return self.r

    def __getitem__(self, k: int):
        if not 0 <= k < self.r:
            raise IndexError(k)
        return lambda t, v, _k=k: self.eval_parts(t, v, [i == _k for i in range(self.r)])[_k]

    def eval_parts(self, t, v, needed=None):  # pragma: no cover - interface
        raise NotImplementedError


class CellSplitParts(_PartsBase):
    """Component masking of a full right-hand side: ``F_k = I_k F``."""

    def __init__(self, F: Callable, partition: CellPartition):
        self.F = F
        self.partition = partition
        self.r = partition.r

    def eval_parts(self, t, v, needed=None):
        masks = self.partition.masks
        if masks[0].shape != np.shape(v):
            raise ValueError("state shape does not match the partition masks")
        if needed is None:
            needed = [True] * self.r
        if not any(needed):
            return [None] * self.r
        f = self.F(t, v)
        return [np.where(mk, f, 0.0) if use else None for mk, use in zip(masks, needed)]


def cell_split(F: Callable, partition: CellPartition) -> CellSplitParts:
    """Split ``F`` into per-region parts that vanish off their own cells."""
    return CellSplitParts(F, partition)


class FluxSplitParts(_PartsBase):
    """Interface masking of a conservative right-hand side.

    Each part divides the masked flux differences by the cell widths, so
    ``h^T F_k = 0`` telescopes on periodic grids for every region.
    """

    def __init__(self, flux: Callable, partition: FluxPartition):
        self.flux = flux
        self.partition = partition
        self.r = partition.r

    def eval_parts(self, t, v, needed=None):
        if needed is None:
            needed = [True] * self.r
        if not any(needed):
            return [None] * self.r
        p = self.partition
        if np.shape(v) != (p.dx.size,):
            raise ValueError("state shape does not match the flux partition")
        phi = self.flux(t, v)
        if np.shape(phi) != (p.dx.size + 1,):
            raise ValueError("flux evaluator must return m + 1 interface values")
        out = []
        for mk, use in zip(p.masks, needed):
            if not use:
                out.append(None)
                continue
            masked = np.where(mk, phi, 0.0)
            out.append((masked[:-1] - masked[1:]) / p.dx)
        return out


def flux_split(flux: Callable, partition: FluxPartition) -> FluxSplitParts:
    return FluxSplitParts(flux, partition)


class FluxSplit2DParts(_PartsBase):
    def __init__(self, fluxes, partition: FluxPartition2D):
        self.flux_x, self.flux_y = fluxes
        self.partition = partition
        self.r = partition.r

    def eval_parts(self, t, v, needed=None):
        if needed is None:
            needed = [True] * self.r
        if not any(needed):
            return [None] * self.r
        p = self.partition
        fx = self.flux_x(t, v)
        fy = self.flux_y(t, v)
        out = []
        for xm, ym, use in zip(p.xmasks, p.ymasks, needed):
            if not use:
                out.append(None)
                continue
            mfx = np.where(xm, fx, 0.0)
            mfy = np.where(ym, fy, 0.0)
            out.append(
                (mfx[:, :-1] - mfx[:, 1:]) / p.h + (mfy[:-1, :] - mfy[1:, :]) / p.h
            )
        return out


def flux_split_2d(fluxes, partition: FluxPartition2D) -> FluxSplit2DParts:
    return FluxSplit2DParts(fluxes, partition)


class TrivialParts(_PartsBase):
    """The whole right-hand side as a single part (r = 1)."""

    def __init__(self, F: Callable):
        self.F = F
        self.r = 1

    def eval_parts(self, t, v, needed=None):
        if needed is not None and not needed[0]:
            return [None]
        return [self.F(t, v)]


def trivial_parts(F: Callable) -> TrivialParts:
    return TrivialParts(F)


class DynamicCellSplit(_PartsBase):
    """Cell split whose partition is rebuilt from the state once per step."""

    def __init__(self, F: Callable, rule: Callable[[np.ndarray], CellPartition], r: int = 2):
        self.F = F
        self.rule = rule
        self.r = r
        self.partition: CellPartition | None = None

    def begin_step(self, u: np.ndarray) -> None:
        self.partition = self.rule(u)
        if self.partition.r != self.r:
            raise ValueError("dynamic rule produced the wrong number of regions")

    def eval_parts(self, t, v, needed=None):
        if self.partition is None:
            self.begin_step(v)
        return CellSplitParts(self.F, self.partition).eval_parts(t, v, needed)


def burgers_dynamic_partition(u: np.ndarray, threshold: float = 0.125) -> CellPartition:
    """Shock-tracking rule: region 1 where the state is strictly below the
    threshold (small local wave speed), region 2 elsewhere."""
    low = np.asarray(u) < threshold
    return CellPartition((low, ~low))


def mass(h, v) -> float:
    """Weighted sum ``sum_j h_j v_j`` (cell measures times state)."""
    v = np.asarray(v)
    h = np.asarray(h, dtype=float)
    if h.ndim and h.shape != v.shape:
        raise ValueError("weight and state shapes differ")
    return float(np.sum(h * v))


# ----------------------------------------------------------------------
# partition specification strings
# ----------------------------------------------------------------------

_SAFE_FUNCS = {"abs": np.abs, "min": np.minimum, "max": np.maximum}


def _eval_predicate(expr: str, coords: dict) -> np.ndarray:
    try:
        out = eval(expr, {"__builtins__": {}}, {**_SAFE_FUNCS, **coords})
    except Exception as exc:
        raise ValueError(f"cannot evaluate predicate {expr!r}: {exc}") from None
    return np.asarray(out, dtype=bool)


def parse_partition_spec(spec: str, grid):
    """Parse a textual partition specification.

    Supported forms:

    * ``ranges:12-37,62-87`` -- inclusive 0-based index ranges (1D);
    * a geometric predicate in ``x`` (and ``y`` in 2D), e.g.
      ``abs(x-0.5)+abs(y-0.5)<=1/3``;
    * ``dynamic:burgers:threshold=0.125`` -- shock-tracking rule.

    Ranges and predicates select the refined region 2 by default; prefix
    with ``coarse:`` to make the selection region 1 instead.  The dynamic
    form returns a state-dependent rule; the others a
    :class:`CellPartition`.
    """
    spec = spec.strip()
    if spec.startswith("dynamic:"):
        _, kind, *opts = spec.split(":")
        if kind != "burgers":
            raise ValueError(f"unknown dynamic partition {kind!r}")
        threshold = 0.125
        for opt in opts:
            key, _, val = opt.partition("=")
            if key != "threshold":
                raise ValueError(f"unknown dynamic option {key!r}")
            threshold = float(val)
        return lambda u: burgers_dynamic_partition(u, threshold)

    selects_coarse = False
    if spec.startswith("coarse:"):
        selects_coarse = True
        spec = spec[len("coarse:"):]
    elif spec.startswith("refined:"):
        spec = spec[len("refined:"):]

    if spec.startswith("ranges:"):
        body = spec[len("ranges:"):]
        m = grid.x.size if hasattr(grid, "x") and grid.x.ndim == 1 else None
        if m is None:
            raise ValueError("index ranges require a 1D grid")
        sel = np.zeros(m, dtype=bool)
        for chunk in body.split(","):
            lo, _, hi = chunk.partition("-")
            lo_i, hi_i = int(lo), int(hi) if hi else int(lo)
            if not 0 <= lo_i <= hi_i < m:
                raise ValueError(f"index range {chunk!r} outside 0..{m-1}")
            sel[lo_i : hi_i + 1] = True
    else:
        if hasattr(grid, "h"):  # 2D
            X, Y = np.meshgrid(grid.x, grid.y)
            sel = _eval_predicate(spec, {"x": X, "y": Y})
        else:
            sel = _eval_predicate(spec, {"x": grid.x})

    refined = ~sel if selects_coarse else sel
    return CellPartition.two_region(refined)
