"""The compiled kernels and the pure-Python fallback must agree."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fdalloc import _backend
from fdalloc._backend import pure

from conftest import N0, TC

compiled = _backend.compiled
pytestmark = pytest.mark.skipif(compiled is None, reason="extension not built")

RTOL = 1e-9


def draws(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        yield dict(p_own=rng.uniform(0.05, 5), p_other=rng.uniform(0, 5), bw=rng.uniform(5e3, 300e3),
                   theta=rng.choice([0.005, 0.01, 0.04, 0.1, 0.5]), mu=rng.uniform(0, 0.5),
                   z=rng.uniform(0.5, 4), det=bool(rng.random() < 0.2))


def args(d, *head):
    return (*head, d["theta"], d["mu"], N0, TC, d["z"], 10, d["det"])


def test_ln_inv_moment():
    rng = np.random.default_rng(0)
    for _ in range(200):
        s, a = 10 ** rng.uniform(-3, 2), 10 ** rng.uniform(-2, 8)
        assert compiled.ln_inv_moment(s, a, 10) == pytest.approx(pure.ln_inv_moment(s, a, 10), rel=RTOL)


def test_ln_v_and_gradient():
    for d in draws(200, 1):
        a = args(d, d["p_own"], d["p_other"], d["bw"])
        assert compiled.ln_v(*a) == pytest.approx(pure.ln_v(*a), rel=RTOL)
        assert compiled.ln_v_grad(*a) == pytest.approx(pure.ln_v_grad(*a), rel=1e-7)


def test_ln_v_array():
    d = next(draws(1, 2))
    p = np.linspace(0, 5, 50)
    a = args(d, p, 2.0, d["bw"])
    np.testing.assert_allclose(compiled.ln_v_array(*a), pure.ln_v_array(*a), rtol=RTOL)


def test_inverses():
    for d in draws(100, 3):
        target = pure.ln_v(*args(d, d["p_own"], d["p_other"], d["bw"]))
        a_pow = args(d, target, d["p_other"], d["bw"])
        got = compiled.power_for_ln_v(*a_pow, 5.0)
        assert got == pytest.approx(pure.power_for_ln_v(*a_pow, 5.0), rel=1e-8)
        a_bw = args(d, target, d["p_own"], d["p_other"])
        assert compiled.bw_for_ln_v(*a_bw, 1e6) == pytest.approx(pure.bw_for_ln_v(*a_bw, 1e6), rel=1e-8)
        a_int = args(d, target * 0.9, d["p_own"], d["bw"])
        assert compiled.interferer_power_for_ln_v(*a_int, 5.0) == pytest.approx(
            pure.interferer_power_for_ln_v(*a_int, 5.0), rel=1e-8, abs=1e-12)


def test_pair_solvers():
    rng = np.random.default_rng(4)
    for _ in range(60):
        th1, th2 = rng.choice([0.01, 0.04, 0.1], 2)
        mu1, mu2 = rng.uniform(0, 0.3, 2)
        z = rng.uniform(0.5, 4)
        t1, t2 = rng.uniform(5, 150, 2)
        common = (th1, th2, mu1, mu2, 5.0, 5.0, N0, TC, z, 10, False, 1e6)
        got = compiled.pair_min_bandwidth(t1, t2, *common)
        want = pure.pair_min_bandwidth(t1, t2, *common)
        assert got[3] == want[3]
        np.testing.assert_allclose(got[:3], want[:3], rtol=1e-7)
        for pattern in (0, 1):
            got = compiled.pattern_bandwidth(t1, t2, pattern, *common)
            want = pure.pattern_bandwidth(t1, t2, pattern, *common)
            np.testing.assert_allclose(got, want, rtol=1e-7)


def test_pure_python_solve_matches():
    code = (
        "import json, sys; sys.path.insert(0, 'tests');"
        "from conftest import one_pair_spec;"
        "from fdalloc import _backend; from fdalloc.fd_problem import solve_fd;"
        "a, r = solve_fd(one_pair_spec(theta=(0.04, 0.01), eps=0.01));"
        "print(json.dumps([_backend.BACKEND, a.weighted_sum_quality]))"
    )
    root = os.path.dirname(os.path.dirname(__file__))
    out = {}
    for flag in ("", "1"):
        env = dict(os.environ, FDALLOC_PURE_PYTHON=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, cwd=root,
                             capture_output=True, text=True, check=True)
        backend, value = json.loads(res.stdout)
        out[backend] = value
    assert set(out) == {"cython", "python"}
    assert out["python"] == pytest.approx(out["cython"], abs=1e-6)
