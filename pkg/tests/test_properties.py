import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdalloc.ec_model import ChannelModel, LinkRadioParams, log_v_value
from fdalloc.fd_problem import phi

import props
from conftest import N0, TC, one_pair_spec

power = st.floats(0.01, 8.0)
bandwidth = st.floats(1e3, 5e5)
theta = st.sampled_from([0.005, 0.01, 0.04, 0.1, 0.3])
gain = st.floats(0.5, 4.0)
mu = st.floats(0.0, 0.5)


@settings(max_examples=200, deadline=None)
@given(p=power, q=st.floats(0.0, 8.0), bw=bandwidth, grow=st.floats(1.001, 4.0), th=theta, z=gain, m=mu)
def test_v_grows_with_bandwidth(p, q, bw, grow, th, z, m):
    radio, ch = LinkRadioParams(th, m, N0, TC), ChannelModel(z)
    assert log_v_value(p, q, bw * grow, radio, ch) > log_v_value(p, q, bw, radio, ch)


@settings(max_examples=200, deadline=None)
@given(p=power, q=st.floats(0.0, 8.0), bw=bandwidth, tau=st.floats(1.001, 4.0), th=theta, z=gain, m=mu)
def test_joint_scaling_helps(p, q, bw, tau, th, z, m):
    radio, ch = LinkRadioParams(th, m, N0, TC), ChannelModel(z)
    lo = log_v_value(p, q, bw, radio, ch)
    assert log_v_value(tau * p, tau * q, tau * bw, radio, ch) >= lo * (1 - props.TOL)


@settings(max_examples=200, deadline=None)
@given(lo=st.lists(st.floats(0.01, 20.0), min_size=2, max_size=2),
       step=st.lists(st.floats(1e-4, 2.0), min_size=2, max_size=2))
def test_phi_monotone(lo, step):
    spec = one_pair_spec()
    y = np.exp(lo)
    assert phi(y * np.exp(step), spec) > phi(y, spec)


@pytest.mark.parametrize("name,n", [("projection-budget-and-peak", 60), ("solution-peak", 15)])
def test_structural_checks(name, n):
    assert props.run(props.CHECKS[name], n, seed=11) == []
