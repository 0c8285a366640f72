"""WENO5 reconstruction kernels (classic smoothness-weighted stencils).

All kernels act on the last axis and expect arrays padded with three
ghost cells on each side, so a line of ``m`` cells comes in with length
``m + 6`` and produces values at the ``m + 1`` interfaces.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "WENO_EPS",
    "pad_periodic",
    "pad_dirichlet",
    "edge_from_left",
    "edge_from_right",
    "interface_states",
    "llf_split_flux",
    "weno5_flux",
]

WENO_EPS = 1e-6  # regularization in the nonlinear weights
_GAMMAS = (0.1, 0.6, 0.3)


def pad_periodic(u: np.ndarray, width: int = 3) -> np.ndarray:
    return np.concatenate([u[..., -width:], u, u[..., :width]], axis=-1)


def pad_dirichlet(u: np.ndarray, left, right, width: int = 3) -> np.ndarray:
    """Pad with given ghost values (scalars or arrays of shape (..., width))."""
    shape = u.shape[:-1] + (width,)
    lg = np.broadcast_to(np.asarray(left, dtype=float), shape)
    rg = np.broadcast_to(np.asarray(right, dtype=float), shape)
    return np.concatenate([lg, u, rg], axis=-1)


def _weighted_edge(a, b, c, d, e):
    # Value at the downstream edge of the center cell c, biased to the
    # (a, b, c) side; candidate stencils and Jiang-Shu indicators.
    p0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0
    p1 = (-b + 5.0 * c + 2.0 * d) / 6.0
    p2 = (2.0 * c + 5.0 * d - e) / 6.0
    beta0 = 13.0 / 12.0 * (a - 2.0 * b + c) ** 2 + 0.25 * (a - 4.0 * b + 3.0 * c) ** 2
    beta1 = 13.0 / 12.0 * (b - 2.0 * c + d) ** 2 + 0.25 * (b - d) ** 2
    beta2 = 13.0 / 12.0 * (c - 2.0 * d + e) ** 2 + 0.25 * (3.0 * c - 4.0 * d + e) ** 2
    a0 = _GAMMAS[0] / (WENO_EPS + beta0) ** 2
    a1 = _GAMMAS[1] / (WENO_EPS + beta1) ** 2
    a2 = _GAMMAS[2] / (WENO_EPS + beta2) ** 2
    s = a0 + a1 + a2
    return (a0 * p0 + a1 * p1 + a2 * p2) / s


def edge_from_left(w: np.ndarray) -> np.ndarray:
    """Left-biased interface values from a padded line.

    For interfaces ``i = 0..m`` this uses cells ``i-3..i+1`` and returns
    the reconstruction at the right edge of cell ``i-1`` (the upwind value
    for positive wind).
    """
    m = w.shape[-1] - 6
    n = m + 1
    return _weighted_edge(
        w[..., 0:n], w[..., 1 : n + 1], w[..., 2 : n + 2],
        w[..., 3 : n + 3], w[..., 4 : n + 4],
    )


def edge_from_right(w: np.ndarray) -> np.ndarray:
    """Right-biased interface values (mirror image of :func:`edge_from_left`)."""
    m = w.shape[-1] - 6
    n = m + 1
    return _weighted_edge(
        w[..., 5 : n + 5], w[..., 4 : n + 4], w[..., 3 : n + 3],
        w[..., 2 : n + 2], w[..., 1 : n + 1],
    )


def interface_states(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reconstructed left/right states ``(u_minus, u_plus)`` at all interfaces."""
    return edge_from_left(w), edge_from_right(w)


def weno5_flux(v: np.ndarray, windsign: int = 1, boundary="periodic") -> np.ndarray:
    """Upwind-biased interface fluxes for a line of point values.

    ``windsign`` picks the bias (+1 takes the reconstruction from the
    left, -1 from the right).  ``boundary`` is either ``"periodic"`` or a
    pair ``(left, right)`` of ghost values (scalars or length-3 arrays).
    Needs at least six cells for the interior stencils.
    """
    v = np.asarray(v, dtype=float)
    if v.shape[-1] < 6:
        raise ValueError("WENO5 needs at least 6 cells")
    if windsign not in (1, -1):
        raise ValueError("windsign must be +1 or -1")
    if isinstance(boundary, str):
        if boundary != "periodic":
            raise ValueError(f"unknown boundary rule {boundary!r}")
        w = pad_periodic(v)
    else:
        left, right = boundary
        w = pad_dirichlet(v, left, right)
    return edge_from_left(w) if windsign > 0 else edge_from_right(w)


def llf_split_flux(phi_pad: np.ndarray, u_pad: np.ndarray, alpha) -> np.ndarray:
    """Interface fluxes via Lax-Friedrichs flux splitting.

    ``phi_pad`` holds pointwise fluxes and ``u_pad`` the states, both
    padded; ``alpha`` is the dissipation speed (scalar or broadcastable
    against the padded line).  The split parts ``(phi +/- alpha u)/2``
    are reconstructed with opposite bias and summed.
    """
    fplus = 0.5 * (phi_pad + alpha * u_pad)
    fminus = 0.5 * (phi_pad - alpha * u_pad)
    return edge_from_left(fplus) + edge_from_right(fminus)
