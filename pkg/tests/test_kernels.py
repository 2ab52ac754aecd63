import os
import subprocess
import sys

import numpy as np
import pytest

from tabnav import _fallback, kernels
from tabnav.env.graph import available_mask, reward_vector, terminal_mask, transition_tensor
from tabnav.env.presets import load_preset
from tabnav.experiments.sr import walk_tables
from tabnav.rng import derive_rng

compiled = kernels.backends().get("compiled")
needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled extension not built")


def vi_inputs(name="transfer_maze_structure"):
    spec, _ = load_preset(name)
    p = transition_tensor(spec)
    return (p, p @ reward_vector(spec), (~terminal_mask(spec)).astype(float),
            available_mask(spec).astype(np.uint8))


def test_dispatch_reports_backend():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in kernels.backends()


def test_pure_mode_forces_fallback():
    code = "from tabnav import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, TABNAV_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_value_iteration_agrees():
    args = vi_inputs()
    qa, ia = compiled.value_iteration(*args, 0.95, 1e-10, 10_000)
    qb, ib = _fallback.value_iteration(*args, 0.95, 1e-10, 10_000)
    assert abs(ia - ib) <= 1
    assert np.allclose(qa, qb, rtol=0, atol=1e-9)


@needs_compiled
def test_jacobi_agrees():
    x = derive_rng(0).standard_normal((30, 12))
    a = np.ascontiguousarray(x.T @ x)
    va, wa, _ = compiled.jacobi_eigh(a, 1e-12, 100)
    vb, wb, _ = _fallback.jacobi_eigh(a, 1e-12, 100)
    assert np.allclose(np.sort(va), np.sort(vb), rtol=0, atol=1e-10)
    assert np.allclose(np.sort(va), np.linalg.eigvalsh(a), rtol=0, atol=1e-9)
    for w in (wa, wb):
        assert np.allclose(w.T @ w, np.eye(12), atol=1e-10)


@needs_compiled
@pytest.mark.parametrize("name", ["open_field", "community_graph", "transfer_maze_reward"])
def test_sr_walk_agrees(name):
    spec, _ = load_preset(name)
    t = walk_tables(spec)
    n = 20_000
    u = derive_rng(1).random(3 * n)
    results = []
    for impl in (compiled, _fallback):
        psi = np.zeros((spec.n_states, spec.n_actions, spec.n_states))
        visits = np.zeros((spec.n_states, spec.n_actions))
        out = impl.sr_td_walk(psi, visits, t.succ_ptr, t.succ_next, t.succ_cum, t.act_ptr,
                              t.act_list, t.terminal, t.starts, spec.start_states[0], 0, n, u,
                              0.95, 1.0, 0.7, 0.0)
        results.append((psi, visits, out))
    (pa, va, oa), (pb, vb, ob) = results
    assert oa[:4] == ob[:4]
    assert np.array_equal(va, vb)
    assert np.allclose(pa, pb, rtol=0, atol=1e-10)
    assert abs(oa[4] - ob[4]) <= 1e-9 * max(1.0, abs(ob[4]))


@needs_compiled
def test_net_training_agrees():
    rng = derive_rng(2)
    params = [rng.uniform(-0.1, 0.1, (15, 20)), np.zeros(20), rng.uniform(-0.1, 0.1, (20, 15)),
              np.zeros(15)]
    walk = rng.integers(0, 15, 3001)
    a = [p.copy() for p in params]
    b = [p.copy() for p in params]
    la = compiled.net_train(*a, walk[:-1].copy(), walk[1:].copy(), 0.1)
    lb = _fallback.net_train(*b, walk[:-1].copy(), walk[1:].copy(), 0.1)
    assert np.allclose(la, lb, rtol=0, atol=1e-10)
    for x, y in zip(a, b):
        assert np.allclose(x, y, rtol=0, atol=1e-10)
