"""The numba kernels and their numpy fallbacks must agree."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pottslab import kernels
from pottslab._jit import backend
from pottslab.ensembles import gnm
from pottslab.model import balance_window

seeds = st.integers(0, 2**32 - 1)


@given(st.integers(2, 8), st.integers(2, 4), seeds)
def test_energy_histogram_paths_agree(n, k, seed):
    m = min(n * (n - 1) // 2, int(seed % (2 * n + 1)))
    G = gnm(n, m, seed)
    indptr, indices = G.csr
    ok = balance_window(n, k)
    args = (n, k, indptr, indices, G.num_edges, ok, 1, 0, k ** (n - 1))
    a = kernels.energy_histogram_nb(*args)
    b = kernels.energy_histogram_np(*args)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@given(st.integers(2, 7), st.integers(2, 4), seeds)
def test_energy_table_paths_agree(n, k, seed):
    G = gnm(n, min(n * (n - 1) // 2, n + 1), seed)
    indptr, indices = G.csr
    assert np.array_equal(kernels.energy_table_nb(n, k, indptr, indices), kernels.energy_table_np(n, k, indptr, indices))


@given(st.integers(2, 9), seeds)
def test_fk_counts_paths_agree(n, seed):
    G = gnm(n, min(n * (n - 1) // 2, 12), seed)
    eu, ev = G.edges[:, 0].copy(), G.edges[:, 1].copy()
    assert np.array_equal(kernels.fk_counts_nb(n, eu, ev), kernels.fk_counts_np(n, eu, ev))


@pytest.mark.parametrize("name,per", [("heat_bath", 1), ("metropolis", 2)])
@given(seed=seeds, beta=st.floats(0.0, 4.0))
def test_chain_paths_agree(name, per, seed, beta):
    n, k, steps = 15, 3, 2000
    G = gnm(n, 25, seed)
    indptr, indices = G.csr
    gen = np.random.default_rng(seed)
    col = gen.integers(0, k, size=n)
    boltz = np.exp(-beta * np.arange(int(G.degrees().max()) + 2, dtype=float))
    uv, uc = gen.random(steps), gen.random(per * steps)
    energy = int(np.sum(col[G.edges[:, 0]] == col[G.edges[:, 1]]))
    powk = k ** np.arange(n, dtype=np.int64)
    out = []
    for fn in (getattr(kernels, name + "_nb"), getattr(kernels, name + "_np")):
        c = col.copy()
        te = np.empty(steps, dtype=np.int64)
        ts = np.empty(steps, dtype=np.int64)
        e = fn(indptr, indices, c, k, boltz, uv, uc, energy, te, ts, powk)
        out.append((int(e), c, te, ts))
    (e1, c1, t1, s1), (e2, c2, t2, s2) = out
    assert e1 == e2
    assert np.array_equal(c1, c2) and np.array_equal(t1, t2) and np.array_equal(s1, s2)


@given(st.integers(2, 9), seeds)
def test_row_projection_paths_agree(k, seed):
    V = np.random.default_rng(seed).normal(size=(k, k))
    lo, hi = np.zeros((k, k)), np.ones((k, k))
    assert np.allclose(kernels.project_rows_bounded_nb(V, lo, hi), kernels.project_rows_bounded_np(V, lo, hi), atol=1e-12)


@given(st.integers(2, 8), seeds)
def test_dykstra_paths_agree(k, seed):
    M = np.random.default_rng(seed).random((k, k))
    lo = np.zeros((k, k))
    hi = np.ones((k, k))
    Xa, _, ra = kernels.dykstra_nb(M, lo, hi, 1e-12, 100_000)
    Xb, _, rb = kernels.dykstra_np(M, lo, hi, 1e-12, 100_000)
    assert ra < 1e-12 and rb < 1e-12
    assert np.allclose(Xa, Xb, atol=1e-9)


def test_backend_default():
    expected = "numpy" if os.environ.get("POTTSLAB_DISABLE_NUMBA", "") not in ("", "0") else "numba"
    assert backend() == expected


SNIPPET = """
import json, math
from pottslab._jit import backend
from pottslab.ensembles import gnm
from pottslab.exact import z_enumerate, z_fk
from pottslab.mcmc import GlauberChain
from pottslab.landscape import project_doubly_stochastic
import numpy as np
G = gnm(7, 10, 3)
ch = GlauberChain(G, 3, 1.0, rng=1)
te, _ = ch.run(3000, 2, energy_trace=True)
X = np.asarray(project_doubly_stochastic(np.random.default_rng(0).random((5, 5))))
print(json.dumps({"backend": backend(), "enum": z_enumerate(G, 3, 1.0).log_z, "fk": z_fk(G, 3, 1.0).log_z,
                  "trace": te[-50:].tolist(), "proj": X.ravel().tolist()}))
"""


def _run(disabled: bool) -> dict:
    env = dict(os.environ)
    env["POTTSLAB_DISABLE_NUMBA"] = "1" if disabled else "0"
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def test_env_switch_selects_fallback_with_same_results():
    a, b = _run(False), _run(True)
    assert a["backend"] == "numba" and b["backend"] == "numpy"
    assert abs(a["enum"] - b["enum"]) < 1e-12
    assert abs(a["fk"] - b["fk"]) < 1e-12
    assert a["trace"] == b["trace"]
    assert np.allclose(a["proj"], b["proj"], atol=1e-12)
