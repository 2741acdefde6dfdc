import os
import subprocess
import sys

import numpy as np
import pytest

from ghzqkd import _kernel, protocol
from ghzqkd.protocol import SessionConfig, run_session
from ghzqkd.qcore import Basis
from ghzqkd.threat import ChannelConfig, EntangleAncilla, InterceptResend, NoEve, kernel_args

compiled = pytest.mark.skipif(_kernel.compiled_backend is None, reason="compiled kernel not built")

STRATEGIES = [
    NoEve(),
    InterceptResend(),
    InterceptResend(x_prob=0.8),
    EntangleAncilla.controlled_rotation(1.0),
    EntangleAncilla.controlled_rotation(0.37, Basis.X),
]


def _uniforms(n, seed):
    return np.random.default_rng(seed).random((n, _kernel.N_UNIFORMS))


@compiled
@pytest.mark.parametrize("eve", STRATEGIES, ids=lambda e: e.describe()["strategy"])
def test_compiled_and_python_kernels_are_bit_identical(eve):
    u = _uniforms(20_000, 3)
    args = (0.1, 0.3) + kernel_args(eve)
    a = _kernel.get_backend("compiled")(u, *args)
    b = _kernel.get_backend("python")(u, *args)
    assert a.dtype == b.dtype == np.int8
    assert np.array_equal(a, b)


@pytest.mark.parametrize("eve", STRATEGIES, ids=lambda e: e.describe()["strategy"])
def test_reference_engine_matches_kernel(eve):
    cfg = SessionConfig(n_rounds=400, seed=17, eve=eve, channel=ChannelConfig(0.15, 0.25))
    ref = run_session(cfg, engine="reference")
    fast = run_session(cfg, engine="python")
    assert np.array_equal(ref.rounds.data, fast.rounds.data)
    assert ref.stats == fast.stats


def test_results_do_not_depend_on_chunking(monkeypatch):
    cfg = SessionConfig(n_rounds=5000, seed=9, channel=ChannelConfig(0.1, 0.1), eve=InterceptResend())
    whole = run_session(cfg).rounds.data
    monkeypatch.setattr(protocol, "CHUNK_ROUNDS", 333)
    assert np.array_equal(run_session(cfg).rounds.data, whole)


def test_kernel_output_layout():
    u = _uniforms(2000, 1)
    out = _kernel.get_backend("python")(u, 0.3, 0.0, *kernel_args(NoEve()))
    lost = out[:, _kernel.LOST] == 1
    assert np.all(out[lost][:, [_kernel.B2, _kernel.O2, _kernel.B3, _kernel.O3]] == -1)
    assert np.all(out[:, [_kernel.EVE_B, _kernel.EVE_O]] == -1)
    kept = out[~lost]
    assert np.all(kept[:, _kernel.B3] == (kept[:, _kernel.B1] != kept[:, _kernel.B2]))
    assert np.all(out[:, _kernel.NOISE] == -1)


def test_empty_input():
    out = _kernel.simulate_rounds(np.zeros((0, _kernel.N_UNIFORMS)), 0.0, 0.0, *kernel_args(NoEve()))
    assert out.shape == (0, _kernel.N_OUT)


def test_backend_selection():
    assert _kernel.get_backend("python") is _kernel.python_backend.simulate_rounds
    assert _kernel.get_backend("auto") is _kernel.simulate_rounds
    with pytest.raises(ValueError):
        _kernel.get_backend("gpu")


def test_pure_python_fallback_selected_by_environment():
    env = dict(os.environ, GHZQKD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ghzqkd; print(ghzqkd.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


def test_benchmark_script_runs():
    bench = os.path.join(os.path.dirname(__file__), os.pardir, "benchmarks", "bench_kernel.py")
    out = subprocess.run([sys.executable, bench, "--rounds", "2000", "--repeat", "1"],
                         capture_output=True, text=True, check=True)
    assert "intercept_resend" in out.stdout
