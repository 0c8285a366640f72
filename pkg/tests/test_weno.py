"""Reconstruction-kernel behavior: consistency, polynomial reproduction,
mirror symmetry and the split-flux path."""

import numpy as np

import pytest

from prk.weno import (
    edge_from_left,
    edge_from_right,
    interface_states,
    llf_split_flux,
    pad_dirichlet,
    pad_periodic,
    weno5_flux,
)


def test_constant_field_reproduced():
    w = pad_periodic(np.full(17, 3.25))
    um, up = interface_states(w)
    assert um.shape == up.shape == (18,)
    assert np.abs(um - 3.25).max() < 1e-14
    assert np.abs(up - 3.25).max() < 1e-14


def test_linear_data_exact():
    # On linear data every candidate stencil is exact, so the nonlinear
    # weights cannot spoil the reconstruction.
    cells = (np.arange(20) - 3.0) * 0.37 + 2.1
    want = (np.arange(15) - 0.5) * 0.37 + 2.1
    assert np.abs(edge_from_left(cells) - want).max() < 1e-12
    assert np.abs(edge_from_right(cells) - want).max() < 1e-12


def test_mirror_symmetry():
    rng = np.random.default_rng(7)
    w = rng.random(25)
    left = edge_from_left(w)
    right_on_reversed = edge_from_right(w[::-1])
    assert np.abs(left - right_on_reversed[::-1]).max() < 1e-14


def test_pad_periodic_wraps():
    u = np.arange(8.0)
    w = pad_periodic(u)
    assert list(w[:3]) == [5.0, 6.0, 7.0]
    assert list(w[-3:]) == [0.0, 1.0, 2.0]


def test_pad_dirichlet_scalar_and_array():
    u = np.ones(6)
    w = pad_dirichlet(u, 2.0, np.array([3.0, 4.0, 5.0]))
    assert list(w[:3]) == [2.0, 2.0, 2.0]
    assert list(w[-3:]) == [3.0, 4.0, 5.0]


def test_llf_split_reduces_to_upwind_for_positive_wind():
    # with alpha = |a| the downwind half of the splitting vanishes, so the
    # result is the left-biased reconstruction of the flux values
    rng = np.random.default_rng(11)
    u = rng.random(30) + 1.0
    a = 1.7
    w = pad_periodic(u)
    split = llf_split_flux(a * w, w, a)
    assert np.abs(split - edge_from_left(a * w)).max() < 1e-13


def test_llf_split_reduces_to_downwind_for_negative_wind():
    rng = np.random.default_rng(12)
    u = rng.random(30) + 1.0
    a = -0.8
    w = pad_periodic(u)
    split = llf_split_flux(a * w, w, abs(a))
    assert np.abs(split - edge_from_right(a * w)).max() < 1e-13


def test_weno5_flux_wrapper():
    rng = np.random.default_rng(21)
    u = rng.random(16)
    assert np.allclose(weno5_flux(u), edge_from_left(pad_periodic(u)))
    assert np.allclose(weno5_flux(u, windsign=-1),
                       edge_from_right(pad_periodic(u)))
    ghost = weno5_flux(u, boundary=(0.0, u[-3:]))
    assert ghost.shape == (17,)
    with pytest.raises(ValueError):
        weno5_flux(u[:4])
    with pytest.raises(ValueError):
        weno5_flux(u, windsign=0)
    with pytest.raises(ValueError):
        weno5_flux(u, boundary="outflow")


def test_kernels_broadcast_over_leading_axes():
    rng = np.random.default_rng(13)
    u = rng.random((4, 30))
    w = pad_periodic(u)
    out = edge_from_left(w)
    assert out.shape == (4, 31)
    for i in range(4):
        assert np.allclose(out[i], edge_from_left(w[i]))
