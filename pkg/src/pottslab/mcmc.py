"""Single-site dynamics for the Potts Gibbs measure and free-energy estimators.

The default kernel is heat-bath Glauber: pick a uniform vertex and redraw
its color from the conditional law given its neighbours.  A Metropolis
kernel (uniform proposal, accept with min(1, e^{-beta dH})) is available
with ``kernel="metropolis"``.

ln Z is estimated by thermodynamic integration,
ln Z(beta) = n ln k - int_0^beta <H>_gamma d gamma, with composite Simpson
on a uniform grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ContractViolation, NumericError
from .exact import GIBBS_GUARD, energy_histograms, gibbs_exact, mean_energy_from_counts, z_enumerate
from .model import ColorAssignment, ModelParams, SimpleGraph, hamiltonian
from .moments import annealed_free_energy

KERNELS = ("heat-bath", "metropolis")
CHUNK = 1 << 16


@dataclass
class ChainState:
    colors: np.ndarray
    k: int
    mono_edges: int
    step_count: int = 0

    @property
    def assignment(self) -> ColorAssignment:
        return ColorAssignment(self.colors.copy(), self.k)


class GlauberChain:
    """A single Markov chain on [k]^n with an incrementally tracked energy.

    Uniforms are drawn in blocks and handed to a compiled kernel, so the
    numba and numpy code paths produce identical trajectories.
    """

    def __init__(self, G: SimpleGraph, k: int, beta: float, colors=None, kernel: str = "heat-bath", rng=None):
        if kernel not in KERNELS:
            raise ContractViolation(f"kernel must be one of {KERNELS}")
        self.G = G
        self.k = int(k)
        self.beta = float(beta)
        self.kernel = kernel
        self.indptr, self.indices = G.csr
        maxdeg = int(G.degrees().max()) if G.n and G.num_edges else 0
        self.boltz = np.exp(-self.beta * np.arange(maxdeg + 2, dtype=float))
        if colors is None:
            gen = np.random.default_rng(rng)
            colors = gen.integers(0, self.k, size=G.n)
        col = np.array(colors, dtype=np.int64)
        if col.shape != (G.n,):
            raise ContractViolation("initial colors have the wrong length")
        self.state = ChainState(col, self.k, hamiltonian(G, ColorAssignment(col, self.k)))
        self.powk = self.k ** np.arange(G.n, dtype=np.int64)

    def audit(self) -> None:
        h = hamiltonian(self.G, self.state.assignment)
        if h != self.state.mono_edges:
            raise NumericError(f"tracked energy {self.state.mono_edges} != recomputed {h}")

    def run(self, steps: int, rng, energy_trace: bool = False, state_trace: bool = False, audit: bool = False):
        """Advance ``steps`` updates; optionally return per-step traces."""
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        steps = int(steps)
        te = np.empty(steps if energy_trace else 0, dtype=np.int64)
        ts = np.empty(steps if state_trace else 0, dtype=np.int64)
        fn = kernels.heat_bath if self.kernel == "heat-bath" else kernels.metropolis
        per = 1 if self.kernel == "heat-bath" else 2
        s = self.state
        done = 0
        while done < steps:
            b = min(CHUNK, steps - done)
            uv = gen.random(b)
            uc = gen.random(per * b)
            s.mono_edges = int(
                fn(
                    self.indptr, self.indices, s.colors, self.k, self.boltz, uv, uc, s.mono_edges,
                    te[done : done + b] if energy_trace else te, ts[done : done + b] if state_trace else ts, self.powk,
                )
            )
            done += b
            s.step_count += b
            if audit:
                self.audit()
        return te, ts


def glauber_step(state: ChainState, G: SimpleGraph, params: ModelParams, rng, kernel: str = "heat-bath") -> ChainState:
    """One update of a copy of ``state``."""
    chain = GlauberChain(G, params.k, params.beta, state.colors, kernel)
    chain.state.step_count = state.step_count
    chain.run(1, rng)
    return chain.state


def transition_matrix(G: SimpleGraph, k: int, beta: float, kernel: str = "heat-bath") -> np.ndarray:
    """Explicit k^n x k^n one-step matrix (tiny instances only)."""
    n = G.n
    if k**n > 4096:
        raise ContractViolation("transition matrix limited to k^n <= 4096")
    N = k**n
    T = np.zeros((N, N))
    nbrs = [G.csr[1][G.csr[0][v] : G.csr[0][v + 1]] for v in range(n)]
    for x in range(N):
        col = ColorAssignment.from_index(x, n, k).colors
        for v in range(n):
            cnt = np.bincount(col[nbrs[v]], minlength=k)
            base = x - col[v] * k**v
            if kernel == "heat-bath":
                w = np.exp(-beta * cnt)
                w /= w.sum()
                for c in range(k):
                    T[x, base + c * k**v] += w[c] / n
            else:
                old = col[v]
                for c in range(k):
                    if c == old:
                        T[x, x] += 1.0 / (n * k)
                        continue
                    acc = min(1.0, math.exp(-beta * (cnt[c] - cnt[old])))
                    T[x, base + c * k**v] += acc / (n * k)
                    T[x, x] += (1.0 - acc) / (n * k)
    return T


def detailed_balance_residual(G: SimpleGraph, k: int, beta: float, kernel: str = "heat-bath") -> float:
    """max_{x,y} |mu(x) T(x,y) - mu(y) T(y,x)|."""
    mu = gibbs_exact(G, k, beta).probs
    T = transition_matrix(G, k, beta, kernel)
    F = mu[:, None] * T
    return float(np.abs(F - F.T).max())


def empirical_distribution(G: SimpleGraph, k: int, beta: float, steps: int, rng, burn_in: int = 0, kernel: str = "heat-bath"):
    """Occupation frequencies of every state over ``steps`` updates after burn-in."""
    if k**G.n > GIBBS_GUARD:
        raise ContractViolation("state space too large for an occupation histogram")
    gen = np.random.default_rng(rng)
    chain = GlauberChain(G, k, beta, kernel=kernel, rng=gen)
    if burn_in:
        chain.run(burn_in, gen)
    _, ts = chain.run(steps, gen, state_trace=True)
    return np.bincount(ts, minlength=k**G.n) / steps


def total_variation(p, q) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@dataclass(frozen=True)
class EnergyEstimate:
    mean: float
    std_error: float
    samples: int
    trace: np.ndarray = field(default=None, repr=False, compare=False)


def batch_means(x: np.ndarray, batches: int = 20) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    b = x.size // batches
    if b < 1:
        raise ContractViolation("too few samples for batch means")
    means = x[: b * batches].reshape(batches, b).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(batches))


def default_burn_in(n: int) -> int:
    """100 n sweeps of n single-site updates."""
    return 100 * n * n


def estimate_mean_energy(
    G: SimpleGraph,
    params: ModelParams,
    budget: int,
    rng,
    burn_in: int | None = None,
    batches: int = 20,
    kernel: str = "heat-bath",
    chain: GlauberChain | None = None,
    keep_trace: bool = False,
) -> EnergyEstimate:
    """Time average of H after burn-in, with a batch-means error bar.

    ``budget`` counts all single-site updates including burn-in.
    """
    burn = default_burn_in(G.n) if burn_in is None else int(burn_in)
    if budget <= burn:
        raise ContractViolation(f"budget {budget} does not exceed burn-in {burn}")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if chain is None:
        chain = GlauberChain(G, params.k, params.beta, kernel=kernel, rng=gen)
    if burn:
        chain.run(burn, gen)
    te, _ = chain.run(budget - burn, gen, energy_trace=True)
    mean, se = batch_means(te, batches)
    return EnergyEstimate(mean, se, te.size, te if keep_trace else None)


# ---------------------------------------------------------------------------
# thermodynamic integration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TISchedule:
    beta_grid: tuple
    sweeps_per_point: int = 2000
    burn_in: int = 200  # sweeps

    def __post_init__(self):
        g = np.asarray(self.beta_grid, dtype=float)
        if g.size == 0 or g[0] != 0.0:
            raise ContractViolation("beta grid must start at 0")
        if np.any(np.diff(g) <= 0):
            raise ContractViolation("beta grid must be strictly increasing")
        if g.size > 1 and (g.size % 2 == 0 or not np.allclose(np.diff(g), g[1] - g[0], rtol=1e-12, atol=0)):
            raise ContractViolation("Simpson needs an odd number of equally spaced points")
        if self.sweeps_per_point < 1 or self.burn_in < 0:
            raise ContractViolation("sweeps must be positive")
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in g))

    @classmethod
    def uniform(cls, beta: float, points: int = 33, sweeps_per_point: int = 2000, burn_in: int = 200) -> "TISchedule":
        if beta == 0:
            return cls((0.0,), sweeps_per_point, burn_in)
        return cls(tuple(np.linspace(0.0, beta, points)), sweeps_per_point, burn_in)


def simpson_weights(npts: int, h: float) -> np.ndarray:
    if npts == 1:
        return np.zeros(1)
    w = np.ones(npts)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _simpson_with_error(values: np.ndarray, h: float) -> tuple[float, float]:
    """Composite Simpson and a Richardson estimate of its error."""
    npts = values.size
    if npts == 1:
        return 0.0, 0.0
    full = float(np.dot(simpson_weights(npts, h), values))
    if (npts - 1) % 4 == 0:
        half = float(np.dot(simpson_weights((npts + 1) // 2, 2 * h), values[::2]))
        return full, abs(full - half) / 15.0
    return full, math.nan


@dataclass(frozen=True)
class TIResult:
    log_z: float
    stat_error: float
    quad_error: float
    beta_grid: tuple
    mean_energy: tuple
    std_errors: tuple

    @property
    def total_error(self) -> float:
        return math.hypot(self.stat_error, self.quad_error)


def thermo_integrate_lnZ(G: SimpleGraph, params: ModelParams, schedule: TISchedule, rng, kernel: str = "heat-bath") -> TIResult:
    """ln Z_beta(G) = n ln k - int_0^beta <H>, <H> estimated by one annealed chain."""
    n, k = G.n, params.k
    grid = np.asarray(schedule.beta_grid)
    if not math.isclose(grid[-1], params.beta, rel_tol=1e-12, abs_tol=1e-15):
        raise ContractViolation("schedule must end at params.beta")
    base = n * math.log(k)
    if grid.size == 1:
        return TIResult(base, 0.0, 0.0, (0.0,), (), ())
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    colors = gen.integers(0, k, size=n)
    means, ses = [], []
    for b in grid:
        chain = GlauberChain(G, k, float(b), colors, kernel)
        est = estimate_mean_energy(
            G, params.with_(beta=float(b)), (schedule.burn_in + schedule.sweeps_per_point) * n, gen,
            burn_in=schedule.burn_in * n, chain=chain,
        )
        colors = chain.state.colors
        means.append(est.mean)
        ses.append(est.std_error)
    h = grid[1] - grid[0]
    integral, quad = _simpson_with_error(np.array(means), h)
    w = simpson_weights(grid.size, h)
    stat = float(math.sqrt(np.sum((w * np.array(ses)) ** 2)))
    return TIResult(base - integral, stat, quad, tuple(grid), tuple(means), tuple(ses))


def thermo_integrate_exact(G: SimpleGraph, k: int, beta: float, points: int = 33) -> TIResult:
    """Same quadrature fed with exact <H> values; isolates the quadrature error."""
    n = G.n
    base = n * math.log(k)
    if beta == 0:
        return TIResult(base, 0.0, 0.0, (0.0,), (), ())
    grid = np.linspace(0.0, beta, points)
    counts, _ = energy_histograms(G, k)
    means = mean_energy_from_counts(counts, grid)
    integral, quad = _simpson_with_error(means, grid[1] - grid[0])
    return TIResult(base - integral, 0.0, quad, tuple(grid), tuple(means), (0.0,) * points)


# ---------------------------------------------------------------------------
# finite-size free energy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreeEnergyRow:
    n: int
    mean: float
    std: float
    formula: float
    gap: float
    replicas: int
    estimator: str


def _replica_log_z(params, stream, estimator, ti_schedule):
    from .ensembles import sample_gnm

    gen = stream.generator
    G = sample_gnm(params, gen)
    if estimator == "exact":
        return z_enumerate(G, params.k, params.beta).log_z
    sched = ti_schedule or TISchedule.uniform(params.beta)
    return thermo_integrate_lnZ(G, params, sched, gen).log_z


def free_energy_experiment(
    k: int,
    d: float,
    beta: float,
    n_grid,
    replicas: int,
    master_seed: int,
    estimator: str = "exact",
    threads: int = 1,
    ti_schedule: TISchedule | None = None,
) -> list[FreeEnergyRow]:
    """Mean and spread of (1/n) ln Z over sampled G(n, m), per n.

    Replica i at size n draws from stream (master_seed, n, i), so results
    do not depend on the number of threads or on execution order.
    """
    from .ensembles import SeededStream

    if estimator not in ("exact", "ti"):
        raise ContractViolation("estimator must be 'exact' or 'ti'")
    rows = []
    for n in n_grid:
        params = ModelParams(k, int(n), d, beta)
        streams = [SeededStream(master_seed, int(n), (i,)) for i in range(replicas)]

        def job(s, params=params):
            return _replica_log_z(params, s, estimator, ti_schedule)

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                vals = list(pool.map(job, streams))
        else:
            vals = [job(s) for s in streams]
        x = np.array(vals) / n
        formula = annealed_free_energy(params)
        std = float(x.std(ddof=1)) if replicas > 1 else 0.0
        rows.append(FreeEnergyRow(int(n), float(x.mean()), std, formula, float(x.mean() - formula), replicas, estimator))
    return rows

