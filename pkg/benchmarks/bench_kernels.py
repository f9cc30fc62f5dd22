"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on the same randomly drawn arguments with both backends; the
table lists microseconds per call and the speed-up. An end-to-end one-pair
solve is timed in a subprocess per backend, since the backend is picked at
import time.
"""
import os
import subprocess
import sys
import timeit

import click
import numpy as np

from fdalloc import _backend

N0, TC = 1e-6, 1e-3

SOLVE = (
    "import time; from fdalloc import config, scenarios; from fdalloc.fd_problem import solve_fd;"
    "spec = config.to_spec(scenarios.get('fig3').base); t = time.perf_counter(); solve_fd(spec);"
    "print(time.perf_counter() - t)"
)


def _cases(rng):
    p, q, bw = rng.uniform(0.5, 5), rng.uniform(0, 5), rng.uniform(20e3, 200e3)
    link = (0.04, 0.1, N0, TC, 1.0, 10, False)
    target = _backend.pure.ln_v(p, q, bw, *link)
    pair = (0.04, 0.01, 0.1, 0.1, 5.0, 5.0, N0, TC, 1.0, 10, False, 1e6)
    return {
        "ln_v": lambda k: k.ln_v(p, q, bw, *link),
        "ln_v_grad": lambda k: k.ln_v_grad(p, q, bw, *link),
        "power_for_ln_v": lambda k: k.power_for_ln_v(target, q, bw, *link, 5.0),
        "bw_for_ln_v": lambda k: k.bw_for_ln_v(target, p, q, *link, 1e6),
        "pair_min_bandwidth": lambda k: k.pair_min_bandwidth(20.0, 10.0, *pair),
    }


@click.command()
@click.option("--repeat", default=200, show_default=True, help="Calls per kernel and backend.")
def main(repeat):
    if _backend.compiled is None:
        raise click.ClickException("compiled extension not built; run `pip install -e .` first")
    cases = _cases(np.random.default_rng(0))
    click.echo(f"{'kernel':<22}{'cython us':>12}{'python us':>12}{'speed-up':>10}")
    for name, fn in cases.items():
        times = [timeit.timeit(lambda: fn(k), number=repeat) / repeat * 1e6
                 for k in (_backend.compiled, _backend.pure)]
        click.echo(f"{name:<22}{times[0]:>12.2f}{times[1]:>12.2f}{times[1] / times[0]:>9.1f}x")
    solve = {}
    for label, flag in (("cython", ""), ("python", "1")):
        env = dict(os.environ, FDALLOC_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", SOLVE], env=env, capture_output=True, text=True, check=True)
        solve[label] = float(out.stdout)
    click.echo(f"{'one-pair solve (s)':<22}{solve['cython']:>12.3f}{solve['python']:>12.3f}"
               f"{solve['python'] / solve['cython']:>9.1f}x")


if __name__ == "__main__":
    main()
