import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tripod_hom import DimensionlessParams, UnitsConfig, make_grid, to_dimensionless
from tripod_hom.core import TimeGrid
from tripod_hom.errors import FastProtocolWarning, InvalidParameterError


def units(**kw):
    base = dict(rabi_frequency=1.0, coupling_constant=1.0, linear_concentration=1.0,
                cell_length=1.0, write_time=1.0, relaxation_rate=0.01)
    base.update(kw)
    return UnitsConfig(**base)


def test_identity_scaling():
    p = to_dimensionless(units(coupling_constant=0.5 ** 0.5))
    assert p.T_W == pytest.approx(1.0, abs=1e-15)
    assert p.L == pytest.approx(1.0, abs=1e-15)


def test_direct_substitution():
    p = to_dimensionless(units(rabi_frequency=2.0, write_time=3.0, cell_length=4.0))
    assert (p.T_W, p.L) == (6.0, 4.0)


def test_rabi_homogeneity():
    u = units(rabi_frequency=1.3, cell_length=2.7, write_time=0.05)
    p1 = to_dimensionless(u)
    p2 = to_dimensionless(units(rabi_frequency=2.6, cell_length=2.7, write_time=0.05))
    assert p2.T_W == pytest.approx(2 * p1.T_W, rel=1e-15)
    assert p2.L == pytest.approx(p1.L / 2, rel=1e-15)


@pytest.mark.parametrize("field", ["rabi_frequency", "coupling_constant", "linear_concentration",
                                   "cell_length", "write_time", "relaxation_rate"])
@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_nonpositive_fields_rejected(field, bad):
    with pytest.raises(InvalidParameterError):
        units(**{field: bad})


def test_dimensionless_params_positive():
    with pytest.raises(InvalidParameterError):
        DimensionlessParams(T_W=0.0, L=1.0)


def test_fast_protocol_warning():
    with pytest.warns(FastProtocolWarning):
        u = units(relaxation_rate=0.5)
    assert not u.fast_protocol_ok
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert units(relaxation_rate=0.01).fast_protocol_ok
        assert units(relaxation_rate=0.5, fast_protocol_threshold=1.0).fast_protocol_ok


def test_stage_settings():
    u = units(rabi_frequency=2.0)
    assert u.stage_rabi("read+") == (2.0, 2.0)
    assert u.stage_rabi("read-") == (2.0, -2.0)
    assert u.stage_rabi("write-2") == (0.0, 2.0)
    assert u.read_time == u.write_time
    with pytest.raises(InvalidParameterError):
        u.stage_rabi("store")


positive = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


@given(positive, positive, positive, positive, positive)
def test_round_trip_through_physical_units(omega, g, N, T_W, L):
    params = DimensionlessParams(T_W=T_W, L=L)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FastProtocolWarning)
        u = UnitsConfig.from_dimensionless(params, omega, g, N, relaxation_rate=1e-6)
        again = to_dimensionless(UnitsConfig.from_dimensionless(to_dimensionless(u), omega, g, N, 1e-6))
    assert again.T_W == pytest.approx(T_W, rel=1e-14)
    assert again.L == pytest.approx(L, rel=1e-14)


def test_trapezoid_endpoints():
    g = make_grid(2, 1.0, "trapezoid")
    np.testing.assert_array_equal(g.nodes, [0.0, 1.0])
    np.testing.assert_array_equal(g.weights, [0.5, 0.5])


def test_trapezoid_composite():
    g = make_grid(3, 2.0, "trapezoid")
    np.testing.assert_array_equal(g.weights, [0.5, 1.0, 0.5])


def test_gauss_legendre_exactness():
    g = make_grid(16, 1.0, "gauss-legendre")
    assert abs(g.integrate(g.nodes**3) - 0.25) < 1e-14
    assert g.nodes[0] > 0 and g.nodes[-1] < 1


@given(st.integers(2, 300), st.floats(1e-3, 1e3), st.sampled_from(["trapezoid", "gauss-legendre"]))
def test_constant_quadrature(n, T_W, rule):
    g = make_grid(n, T_W, rule)
    assert abs(g.integrate(np.ones(n)) - T_W) <= 1e-12 * T_W
    assert np.all(np.diff(g.nodes) > 0)


@pytest.mark.parametrize("n", [0, 1, 2.5])
def test_grid_size_rejected(n):
    with pytest.raises(InvalidParameterError):
        make_grid(n, 1.0)


def test_grid_rule_and_invariants_rejected():
    with pytest.raises(InvalidParameterError):
        make_grid(4, 1.0, "simpson")
    with pytest.raises(InvalidParameterError):
        TimeGrid(nodes=[0.0, 0.2, 0.1], weights=[0.3, 0.4, 0.3], T_W=1.0)
    with pytest.raises(InvalidParameterError):
        TimeGrid(nodes=[0.0, 1.0], weights=[0.5, 0.6], T_W=1.0)


def test_grid_is_read_only():
    g = make_grid(4, 1.0)
    with pytest.raises(ValueError):
        g.nodes[0] = 3.0
    assert g == make_grid(4, 1.0)
    assert g != make_grid(4, 1.0, "trapezoid")
