
import numpy as np
import pytest

from fdalloc import harness, scenarios
from fdalloc.ec_model import ChannelModel, LinkRadioParams
from fdalloc.fd_problem import PairSpec, SystemSpec
from fdalloc.quality import preset

N0, TC = 1e-6, 1e-3


def make_pair(theta=(0.01, 0.01), w=(0.5, 0.5), z=1.0, videos=("Bus", "Coastguard"), mu=(0.1, 0.1),
              pmax=(5.0, 5.0), q_min=(20.0, 20.0), deterministic=False):
    return PairSpec(theta_1=theta[0], theta_2=theta[1],
                    quality_1=preset(videos[0], q_min[0]), quality_2=preset(videos[1], q_min[1]),
                    channel=ChannelModel(z, deterministic=deterministic),
                    w1=w[0], w2=w[1], mu_1=mu[0], mu_2=mu[1], p1_max=pmax[0], p2_max=pmax[1])


def one_pair_spec(total_bw=100e3, eps=1e-3, **kw):
    return SystemSpec([make_pair(**kw)], total_bw, N0, TC, eps)


def random_pair_spec(rng, K=1, eps=1e-3):
    """Random feasible-looking system with weights summing to one."""
    videos = ["Bus", "Coastguard", "Akiyo", "Foreman", "News"]
    w = rng.dirichlet(np.ones(2 * K))
    pairs = []
    for k in range(K):
        pairs.append(make_pair(
            theta=tuple(rng.uniform(0.005, 0.1, 2)), w=(w[k], w[K + k]), z=rng.uniform(0.5, 4.0),
            videos=tuple(rng.choice(videos, 2)), mu=tuple(rng.uniform(0.02, 0.3, 2)),
            pmax=tuple(rng.uniform(2.0, 8.0, 2))))
    total = rng.uniform(80e3, 150e3) * K
    return SystemSpec(pairs, total, N0, TC, eps)


def radio(theta=0.1, mu=0.1):
    return LinkRadioParams(theta, mu, N0, TC)


@pytest.fixture(scope="session")
def table3_run():
    """One run of the built-in three-pair table scenario, shared by the golden and acceptance tests."""
    return harness.run_scenario(scenarios.get("table3pairs"), workers=1)


@pytest.fixture(scope="session")
def fig3_run():
    return harness.run_scenario(scenarios.get("fig3"), workers=1)


# ------------------------------------------------------------ acceptance log
# Acceptance tests record one verdict per criterion part here; the terminal
# summary folds the parts into one PASS/FAIL line per criterion.
ACCEPTANCE = {}


def record(criterion, ok, detail):
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    print(f"{'PASS' if ok else 'FAIL'} [{criterion}] {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, parts in ACCEPTANCE.items():
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        detail = "; ".join(("" if ok else "FAILED: ") + d for ok, d in parts)
        terminalreporter.write_line(f"{verdict} {criterion}: {detail}")
