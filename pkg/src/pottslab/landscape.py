"""The overlap landscape f_{d,beta} on stochastic matrices.

    f(rho) = H(rho / k) + (d/2) ln D(rho),
    D(rho) = 1 - 2 c/k + |rho|_F^2 c^2 / k^2,   c = 1 - exp(-beta).

The module provides f and its exact derivatives, the candidate matrices
rho_bar, rho_s and rho_stable, the row surgeries used to compare
candidates, Euclidean projections onto the row-stochastic set S, the
Birkhoff polytope D and the separable family D_sep, and a multistart
projected-gradient ascent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import ContractViolation, NumericError, OptimizationFailure, ParameterError
from .model import DOUBLY_STOCHASTIC, ROW_STOCHASTIC, StochasticMatrix, entropy_matrix

BAND_LOW = 0.51
ENTRY_FLOOR = 1e-12

DOMAINS = ("S", "D", "D_sep")


@dataclass(frozen=True)
class LandscapeParams:
    k: int
    d: float
    beta: float
    kappa_cap: float = 0.25

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ParameterError("k must be an integer >= 2")
        if not self.d > 0:
            raise ParameterError("d must be positive")
        if not self.beta >= 0:
            raise ParameterError("beta must be nonnegative")
        if not 0 < self.kappa_cap < 1 - BAND_LOW:
            raise ParameterError(f"kappa_cap must lie in (0, {1 - BAND_LOW:.2f})")

    @property
    def c_beta(self) -> float:
        return -math.expm1(-self.beta)

    @property
    def kappa_eff(self) -> float:
        return min(math.log(self.k) ** 20 / self.k, self.kappa_cap)

    @property
    def band(self) -> tuple[float, float]:
        """Forbidden open interval for separable matrices."""
        return BAND_LOW, 1.0 - self.kappa_eff

    def with_(self, **changes) -> "LandscapeParams":
        vals = dict(k=self.k, d=self.d, beta=self.beta, kappa_cap=self.kappa_cap)
        vals.update(changes)
        return LandscapeParams(**vals)


def _arr(rho) -> np.ndarray:
    a = np.asarray(rho, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation("expected a square matrix")
    return a


def _denominator(frob_sq: float, k: int, c: float) -> float:
    return 1.0 - 2.0 * c / k + frob_sq * c * c / (k * k)


def energy_eval(rho, p: LandscapeParams) -> float:
    a = _arr(rho)
    c = p.c_beta
    return 0.5 * p.d * math.log(_denominator(float(np.sum(a * a)), p.k, c))


def f_eval(rho, p: LandscapeParams) -> float:
    a = _arr(rho)
    if a.shape[0] != p.k:
        raise ContractViolation(f"matrix is {a.shape[0]}x{a.shape[0]}, params have k={p.k}")
    return entropy_matrix(a / p.k) + energy_eval(a, p)


def f_diff(x, y, p: LandscapeParams) -> float:
    """f(y) - f(x) computed without cancelling two large values.

    Per entry, phi(y) - phi(x) with phi(t) = (t/k) ln(t/k) is rewritten as
    ((y - x)/k) ln(y/k) + (x/k) log1p((y - x)/x); the energy difference uses
    log1p of the relative change of D.
    """
    x = _arr(x)
    y = _arr(y)
    k, c = p.k, p.c_beta
    dx = y - x
    both = (x > 0) & (y > 0)
    xs = np.where(both, x, 1.0)
    ys = np.where(both, y, 1.0)
    rel = (ys - xs) / xs
    # log1p loses nothing for moderate shrinkage; far below that use the ratio
    log_ratio = np.where(rel > -0.5, np.log1p(np.maximum(rel, -0.5)), np.log(ys / xs))
    dphi = np.where(both, dx / k * np.log(ys / k) + xs / k * log_ratio, 0.0)
    # an entry that leaves or reaches zero contributes its full phi value
    dphi += np.where((x > 0) & ~both, -x / k * np.log(np.where(x > 0, x, 1.0) / k), 0.0)
    dphi += np.where((y > 0) & ~both, y / k * np.log(np.where(y > 0, y, 1.0) / k), 0.0)
    dH = -math.fsum(dphi.ravel())
    Dx = _denominator(float(np.sum(x * x)), k, c)
    dD = c * c / (k * k) * math.fsum((dx * (x + y)).ravel())
    return dH + 0.5 * p.d * math.log1p(dD / Dx)


def grad_entropy(rho, k: int) -> np.ndarray:
    """d H(rho/k) / d rho_ij = -(1 + ln(rho_ij / k)) / k."""
    a = np.maximum(_arr(rho), ENTRY_FLOOR)
    return -(1.0 + np.log(a / k)) / k


def grad_energy(rho, p: LandscapeParams) -> np.ndarray:
    a = _arr(rho)
    c = p.c_beta
    D = _denominator(float(np.sum(a * a)), p.k, c)
    return (p.d * c * c / (p.k * p.k * D)) * a


def grad_f(rho, p: LandscapeParams) -> np.ndarray:
    return grad_entropy(rho, p.k) + grad_energy(rho, p)


# ---------------------------------------------------------------------------
# candidate matrices
# ---------------------------------------------------------------------------


def make_rho_bar(k: int) -> StochasticMatrix:
    return StochasticMatrix(np.full((k, k), 1.0 / k), DOUBLY_STOCHASTIC)


def make_rho_s(k: int, s: int) -> StochasticMatrix:
    """Top s rows from the identity, the rest uniform.

    Row-stochastic for every s; its column sums are 1 only for s in {0, k}.
    """
    if not 0 <= s <= k:
        raise ContractViolation(f"s must lie in [0, {k}]")
    a = np.full((k, k), 1.0 / k)
    a[:s] = np.eye(k)[:s]
    kind = DOUBLY_STOCHASTIC if s in (0, k) else ROW_STOCHASTIC
    return StochasticMatrix(a, kind)


def make_rho_stable(k: int) -> StochasticMatrix:
    a = (1.0 - 1.0 / k) * np.eye(k) + 1.0 / k**2
    return StochasticMatrix(a, DOUBLY_STOCHASTIC)


def xi_eval(eps: float, k: int) -> float:
    if not 0 < eps < k / 2:
        raise ContractViolation("eps must lie in (0, k/2)")
    return k ** (2.0 * eps / k) * (1.0 / eps - 1.0 / k)


def xi_min_location(k: int) -> float:
    if math.log(k) <= 2:
        raise ContractViolation("mu is real only for ln k > 2, i.e. k >= 8")
    return 0.5 * k * (1.0 - math.sqrt(1.0 - 2.0 / math.log(k)))


# ---------------------------------------------------------------------------
# row surgeries
# ---------------------------------------------------------------------------


def smooth_rows(rho, i: int, J) -> np.ndarray:
    """Replace rho[i, J] by its mean over J."""
    a = _arr(rho).copy()
    J = np.unique(np.asarray(list(J), dtype=np.int64))
    if J.size == 0:
        raise ContractViolation("column set J must be nonempty")
    a[i, J] = a[i, J].mean()
    return a


def flatten_row(rho, i: int) -> np.ndarray:
    a = _arr(rho).copy()
    a[i] = 1.0 / a.shape[0]
    return a


def stabilize_row(rho, i: int, alpha: float) -> np.ndarray:
    """Row i becomes 1 - alpha on the diagonal and alpha/(k-1) elsewhere."""
    if not 0 <= alpha <= 1:
        raise ContractViolation("alpha must lie in [0, 1]")
    a = _arr(rho).copy()
    k = a.shape[0]
    a[i] = alpha / (k - 1)
    a[i, i] = 1.0 - alpha
    return a


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def project_row_stochastic(M) -> StochasticMatrix:
    a = _arr(M)
    X = kernels.project_rows_bounded(a, 0.0, 1.0)
    return StochasticMatrix(X, ROW_STOCHASTIC)


def _affine_projection(a: np.ndarray) -> np.ndarray:
    """Projection onto {X : X 1 = 1, 1^T X = 1}."""
    k = a.shape[0]
    r = a.mean(axis=1, keepdims=True)
    c = a.mean(axis=0, keepdims=True)
    return a - r - c + a.mean() + 1.0 / k


def _sum_residual(Y):
    return np.concatenate([Y.sum(axis=1) - 1.0, Y.sum(axis=0) - 1.0])


def _polish(a, X, lo, hi, gap=1e-9, max_iter=100):
    """Exact projection onto {lo <= Y <= hi, unit row and column sums}.

    The projection is clip(a - u 1^T - 1 v^T, lo, hi) for the multipliers
    (u, v) minimizing the convex dual
        h(u, v) = sum_ij phi_ij(a_ij - u_i - v_j) + sum u + sum v,
    phi_ij being the antiderivative of clip(., lo_ij, hi_ij); grad h is
    minus the row/column sum residual.  Starting from multipliers fitted to
    the free entries of the approximate solution X, h is minimized by
    damped semismooth Newton with Armijo backtracking.  Returns None if the
    residual does not reach rounding level.
    """
    k = a.shape[0]
    lo = np.broadcast_to(lo, a.shape)
    hi = np.broadcast_to(hi, a.shape)

    def jac(F):
        F = F.astype(float)
        J = np.zeros((2 * k, 2 * k))
        J[:k, :k] = np.diag(F.sum(axis=1))
        J[:k, k:] = F
        J[k:, :k] = F.T
        J[k:, k:] = np.diag(F.sum(axis=0))
        return J

    def dual(uv):
        z = a - uv[:k, None] - uv[None, k:]
        y = np.clip(z, lo, hi)
        # phi(z) = y z - y^2 / 2 covers all three pieces
        return math.fsum((y * z - 0.5 * y * y).ravel()) + math.fsum(uv), z, y

    free = (X > lo + gap) & (X < hi - gap)
    diff = np.where(free, a - X, 0.0)
    uv = np.linalg.lstsq(jac(free), np.concatenate([diff.sum(axis=1), diff.sum(axis=0)]), rcond=None)[0]
    target = 4.0 * np.finfo(float).eps * k
    h, z, y = dual(uv)
    best = None
    for _ in range(max_iter):
        r = _sum_residual(y)
        rn = np.abs(r).max()
        if rn <= target:
            # keep going while the residual still shrinks; leftover drift in
            # the sums would otherwise leak into line-search increments
            if best is not None and rn >= best[0]:
                return best[1]
            best = (rn, y)
        F = (z > lo) & (z < hi)
        # damping keeps the step finite when few entries are free
        step = np.linalg.solve(jac(F) + (1e-12 + np.abs(r).max()) * np.eye(2 * k), r)
        slope = -float(r @ step)  # directional derivative of h
        t = 1.0
        while True:
            hc, zc, yc = dual(uv + t * step)
            if hc <= h + 1e-4 * t * slope or np.abs(_sum_residual(yc)).max() < np.abs(r).max():
                break
            t *= 0.5
            if t < 1e-12:
                return None if best is None else best[1]
        uv, h, z, y = uv + t * step, hc, zc, yc
    return None if best is None else best[1]


def _project_D_box(a, lo, hi, tol, max_sweeps) -> np.ndarray:
    X = _affine_projection(a)
    if np.all(X >= lo) and np.all(X <= hi):
        return X
    X, sweeps, residual = kernels.dykstra(a, lo, hi, tol, max_sweeps)
    if not residual < tol:
        raise NumericError(f"Dykstra stopped after {sweeps} sweeps with residual {residual:.3e}", residual)
    Y = _polish(a, X, lo, hi)
    return X if Y is None else Y


def project_doubly_stochastic(M, tol: float = 1e-10, max_sweeps: int = 100_000) -> StochasticMatrix:
    """Euclidean projection onto the Birkhoff polytope."""
    X = _project_D_box(_arr(M), 0.0, 1.0, tol, max_sweeps)
    return StochasticMatrix(X, DOUBLY_STOCHASTIC, tol=max(1e-12, 10 * tol))


def separable_pattern(a: np.ndarray, band: tuple[float, float]) -> np.ndarray:
    """Boolean mask of entries assigned to the high side of the band.

    Entries at or above the band midpoint go high.  At most one high entry
    is kept per row and per column (largest first), and a pattern with k-1
    highs is completed to a permutation, since the leftover cell would
    otherwise be forced to 1.
    """
    lo_b, hi_b = band
    k = a.shape[0]
    mid = 0.5 * (lo_b + hi_b)
    mask = np.zeros_like(a, dtype=bool)
    used_r = np.zeros(k, dtype=bool)
    used_c = np.zeros(k, dtype=bool)
    flat = np.argsort(-a, axis=None, kind="stable")
    for f in flat:
        i, j = divmod(int(f), k)
        if a[i, j] < mid:
            break
        if not used_r[i] and not used_c[j]:
            mask[i, j] = used_r[i] = used_c[j] = True
    if mask.sum() == k - 1:
        mask[np.flatnonzero(~used_r)[0], np.flatnonzero(~used_c)[0]] = True
    return mask


def project_separable(M, p: LandscapeParams, tol: float = 1e-10, max_sweeps: int = 100_000) -> StochasticMatrix:
    """Project onto D, then repair entries inside the forbidden band.

    The repair picks a high/low pattern (nearer band endpoint) and projects
    onto the convex piece of D whose pattern entries lie in [1-kappa, 1] and
    whose other entries lie in [0, 0.51].  That piece is nonempty for every
    pattern produced by :func:`separable_pattern` when k >= 3.
    """
    a = _arr(M)
    band = p.band
    X = _project_D_box(a, 0.0, 1.0, tol, max_sweeps)
    if is_separable_matrix(X, p.kappa_eff):
        return StochasticMatrix(X, DOUBLY_STOCHASTIC, tol=max(1e-12, 10 * tol))
    mask = separable_pattern(X, band)
    lo = np.where(mask, band[1], 0.0)
    hi = np.where(mask, 1.0, band[0])
    Y = _project_D_box(a, lo, hi, tol, max_sweeps)
    return StochasticMatrix(Y, DOUBLY_STOCHASTIC, tol=max(1e-12, 10 * tol))


def stability_index(rho) -> int:
    return int(np.count_nonzero(_arr(rho) > BAND_LOW))


def is_separable_matrix(rho, kappa_eff: float) -> bool:
    a = _arr(rho)
    return not bool(np.any((a > BAND_LOW) & (a < 1.0 - kappa_eff)))


# ---------------------------------------------------------------------------
# derivative checks and candidate margins
# ---------------------------------------------------------------------------


def monotonicity_check_beta(rho, p: LandscapeParams) -> float:
    """Exact d f / d beta (only the energy term depends on beta)."""
    a = _arr(rho)
    k, c = p.k, p.c_beta
    S = float(np.sum(a * a))
    return -0.5 * p.d * math.exp(-p.beta) * (2.0 / k - 2.0 * S * c / k**2) / _denominator(S, k, c)


def monotonicity_check_d(rho, p: LandscapeParams) -> float:
    """d f / d d = (1/2) ln D; ``beta = inf`` gives the zero-temperature case."""
    a = _arr(rho)
    c = 1.0 if math.isinf(p.beta) else p.c_beta
    return 0.5 * math.log(_denominator(float(np.sum(a * a)), p.k, c))


def claim_sign_pair(rho, p: LandscapeParams, i: int, j: int, l: int) -> tuple[int, int]:
    """Signs of df/drho_ij - df/drho_il and of its closed-form surrogate.

    The surrogate is 1 + delta/rho_ij - exp(d c^2 delta / (k - 2c + c^2 |rho|^2 / k))
    with delta = rho_il - rho_ij.
    """
    a = _arr(rho)
    g = grad_f(a, p)
    lhs = g[i, j] - g[i, l]
    c = p.c_beta
    delta = a[i, l] - a[i, j]
    S = float(np.sum(a * a))
    x = p.d * c * c * delta / (p.k - 2 * c + c * c * S / p.k)
    rhs = 1.0 + delta / a[i, j] - math.exp(x)
    return int(np.sign(lhs)), int(np.sign(rhs))


@dataclass(frozen=True)
class BarmaxReport:
    k: int
    d: float
    beta: float
    f_bar: float
    margins: tuple  # margins[s] = f(rho_bar) - f(rho_s), s = 0..k
    stable_margin: float

    @property
    def all_positive(self) -> bool:
        return all(m > 0 for m in self.margins[1:]) and self.stable_margin > 0

    def failing_s(self) -> list[int]:
        return [s for s, m in enumerate(self.margins) if s > 0 and not m > 0]


def verify_barmax(k: int, d: float, beta: float) -> BarmaxReport:
    if k < 3:
        raise ContractViolation("k must be at least 3")
    p = LandscapeParams(k, d, beta)
    fb = f_eval(make_rho_bar(k), p)
    margins = tuple(fb - f_eval(make_rho_s(k, s), p) for s in range(k + 1))
    return BarmaxReport(k, d, beta, fb, margins, fb - f_eval(make_rho_stable(k), p))


def smoothing_hypotheses(k: int) -> tuple[float, float, float] | None:
    """(lambda_min, |J|_min at lambda=1, max-entry bound at lambda=1), or None if vacuous.

    The smoothing statement needs lambda >= 3 ln ln k / ln k and |J| >= k^lambda;
    for |J| <= k to be possible lambda must be at most 1.
    """
    lk = math.log(k)
    lam_min = 3.0 * math.log(lk) / lk
    if lam_min > 1.0:
        return None
    return lam_min, k**lam_min, 0.5 - math.log(lk) / lk


@dataclass
class SweepReport:
    checked: int = 0
    violations: list = field(default_factory=list)
    note: str = ""


def smoothing_sweep(k: int, d: float, beta: float, samples: int, rng) -> SweepReport:
    """Randomized check of f(smooth_rows(rho)) >= f(rho) under the hypotheses."""
    gen = np.random.default_rng(rng)
    p = LandscapeParams(k, d, beta)
    hyp = smoothing_hypotheses(k)
    rep = SweepReport()
    if hyp is None:
        rep.note = f"hypotheses unsatisfiable at k={k}: 3 ln ln k / ln k > 1"
        return rep
    lk = math.log(k)
    lam_min = hyp[0]
    for _ in range(samples):
        lam = gen.uniform(lam_min, 1.0)
        size_min = math.ceil(k**lam - 1e-9)
        size = int(gen.integers(size_min, k + 1))
        cap = lam / 2 - math.log(lk) / lk
        rho = gen.dirichlet(np.ones(k), size=k)
        i = int(gen.integers(k))
        J = gen.choice(k, size=size, replace=False)
        row = rho[i].copy()
        mass = row[J].sum()
        # squeeze the J-part toward its mean until the max constraint holds
        mean = mass / size
        if mean >= cap:
            continue
        top = row[J].max()
        if top >= cap:
            t = (cap - mean) / (top - mean) * 0.999
            row[J] = mean + t * (row[J] - mean)
        rho[i] = row
        f0 = f_eval(rho, p)
        f1 = f_eval(smooth_rows(rho, i, J), p)
        rep.checked += 1
        if f1 < f0 - 1e-12:
            rep.violations.append({"lambda": lam, "size": size, "gain": f1 - f0})
    return rep


def flatten_sweep(k: int, d: float, beta: float, samples: int, rng) -> SweepReport:
    """Randomized check of f(flatten_row(rho, i)) >= f(rho) for rows with entries <= 0.49."""
    gen = np.random.default_rng(rng)
    p = LandscapeParams(k, d, beta)
    rep = SweepReport()
    while rep.checked < samples:
        rho = gen.dirichlet(np.ones(k), size=k)
        i = int(gen.integers(k))
        if rho[i].max() > 0.49:
            continue
        rep.checked += 1
        gain = f_eval(flatten_row(rho, i), p) - f_eval(rho, p)
        if gain < -1e-12:
            rep.violations.append({"row": i, "gain": gain})
    return rep


# ---------------------------------------------------------------------------
# multistart projected-gradient ascent
# ---------------------------------------------------------------------------

ARMIJO = 1e-4
SHRINK = 0.5
STEP0 = 1.0


@dataclass(frozen=True)
class RunSummary:
    label: str
    f_value: float
    pg_norm: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class LandscapeResult:
    maximizer: StochasticMatrix
    f_value: float
    pg_norm: float
    stability: int
    start_label: str
    iterations: int
    converged: bool = True
    trace: tuple = field(default=(), repr=False)  # (iteration, f, pg_norm) of the winning run
    ties: tuple = ()  # labels of runs ending within 1e-9 of f_value
    runs: tuple = field(default=(), repr=False)
    min_frob_sq: float = math.nan  # smallest |rho|^2 over all iterates (domain D only)


EXACT_CANON_K = 6


def _sort_columns(r: np.ndarray) -> np.ndarray:
    """Column order putting columns in descending lexicographic order."""
    return np.lexsort(r[::-1])[::-1]


def canonical_form(rho, decimals: int = 9) -> np.ndarray:
    """Representative of rho under independent row and column permutations.

    Entries are compared after rounding to ``decimals``.  For k <= 6 the
    form is exact: every row order is tried, columns are sorted
    lexicographically, and the lexicographically largest result wins.
    Larger k use alternating row/column sorts, which is deterministic but
    can map equivalent matrices to different representatives.
    """
    a = _arr(rho)
    k = a.shape[0]
    if k <= EXACT_CANON_K:
        r = np.round(a, decimals)
        best_key, best = None, None
        for perm in itertools.permutations(range(k)):
            rp = r[list(perm)]
            co = _sort_columns(rp)
            key = tuple(rp[:, co].ravel())
            if best_key is None or key > best_key:
                best_key, best = key, a[list(perm)][:, co]
        return best
    a = a.copy()
    for _ in range(4 * k + 4):
        r = np.round(a, decimals)
        ro = np.lexsort(r.T[::-1])[::-1]
        a = a[ro]
        co = _sort_columns(np.round(a, decimals))
        a = a[:, co]
        if np.array_equal(ro, np.arange(k)) and np.array_equal(co, np.arange(k)):
            break
    return a


def _projector(domain: str, p: LandscapeParams) -> Callable[[np.ndarray], np.ndarray]:
    if domain == "S":
        return lambda M: kernels.project_rows_bounded(M, 0.0, 1.0)
    if domain == "D":
        return lambda M: _project_D_box(M, 0.0, 1.0, 1e-10, 100_000)
    raise ContractViolation(f"unknown domain {domain!r}; expected one of {DOMAINS}")


def _piece_projector(mask: np.ndarray, p: LandscapeParams):
    lo = np.where(mask, p.band[1], 0.0)
    hi = np.where(mask, 1.0, p.band[0])
    return lambda M: _project_D_box(M, lo, hi, 1e-10, 100_000)


def _normal_part(g: np.ndarray, columns: bool) -> np.ndarray:
    """Component of g in the span of the row (and column) sum constraints."""
    r = g.mean(axis=1, keepdims=True)
    if not columns:
        return np.broadcast_to(r, g.shape)
    return r + g.mean(axis=0, keepdims=True) - g.mean()


def _ascend(x, p, project, tol, max_iter, keep_trace, columns=True):
    """Projected-gradient ascent with Armijo backtracking.

    The sufficient-increase test is applied to f minus its first-order
    change along the constraint normals.  On the feasible set the two agree;
    the correction only cancels the effect of rounding drift in the row and
    column sums, which otherwise swamps increments below ~1e-14.
    """
    fx = f_eval(x, p)
    trace = []
    min_frob = float(np.sum(x * x))
    pg = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = grad_f(x, p)
        pg = float(np.linalg.norm(project(x + g) - x))
        if keep_trace:
            trace.append((it - 1, fx, pg))
        if pg < tol:
            return x, fx, pg, it - 1, True, trace, min_frob
        gn = _normal_part(g, columns)
        gt = g - gn
        t = STEP0
        while True:
            y = project(x + t * g)
            step = y - x
            gain = f_diff(x, y, p) - math.fsum((gn * step).ravel())
            if gain >= ARMIJO * math.fsum((gt * step).ravel()):
                break
            t *= SHRINK
            if t < 1e-14:
                return x, fx, pg, it, False, trace, min_frob
        x, fx = y, f_eval(y, p)
        min_frob = min(min_frob, float(np.sum(x * x)))
    g = grad_f(x, p)
    pg = float(np.linalg.norm(project(x + g) - x))
    if keep_trace:
        trace.append((max_iter, fx, pg))
    return x, fx, pg, max_iter, pg < tol, trace, min_frob


def start_points(p: LandscapeParams, n_random: int = 20, seed: int = 0) -> list[tuple[str, np.ndarray]]:
    k = p.k
    pts = [("rho_bar", np.asarray(make_rho_bar(k)))]
    pts += [(f"rho_{s}", np.asarray(make_rho_s(k, s))) for s in range(1, k + 1)]
    pts.append(("rho_stable", np.asarray(make_rho_stable(k))))
    gen = np.random.default_rng(seed)
    pts += [(f"random_{r}", gen.dirichlet(np.ones(k), size=k)) for r in range(n_random)]
    return pts


def maximize_f(
    p: LandscapeParams,
    domain: str = "D",
    n_random: int = 20,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    starts: list | None = None,
) -> LandscapeResult:
    """Multistart projected-gradient ascent of f over S, D or D_sep.

    Every start is first projected onto the domain.  The winner is the best
    terminal point among converged runs; ties within 1e-9 are listed and the
    reported maximizer is the lexicographically largest canonical form.
    """
    pts = starts if starts is not None else start_points(p, n_random, seed)
    finals = []
    for label, x0 in pts:
        if domain == "D_sep":
            # D_sep is a disjoint union of convex pieces indexed by the set of
            # high entries; the repaired start fixes the piece for this run
            x = np.asarray(project_separable(x0, p))
            project = _piece_projector(x > BAND_LOW, p)
        else:
            project = _projector(domain, p)
            x = project(np.asarray(x0, dtype=float))
        xf, fx, pg, it, ok, trace, mf = _ascend(x, p, project, tol, max_iter, True, domain != "S")
        finals.append((label, xf, fx, pg, it, ok, tuple(trace), mf))
    runs = tuple(RunSummary(lab, fx, pg, it, ok) for lab, _, fx, pg, it, ok, _, _ in finals)
    pool = [r for r in finals if r[5]]
    min_frob = min(r[7] for r in finals) if domain == "D" else math.nan
    if not pool:
        best = max(finals, key=lambda r: r[2])
        res = _result(best, finals, runs, min_frob, converged=False)
        raise OptimizationFailure("no start point converged", best=res)
    best = max(pool, key=lambda r: r[2])
    return _result(best, pool, runs, min_frob, converged=True)


def _result(best, pool, runs, min_frob, converged):
    fstar = best[2]
    tied = [r for r in pool if r[2] >= fstar - 1e-9]
    canon = sorted(tied, key=lambda r: tuple(canonical_form(r[1]).ravel()), reverse=True)
    chosen = canon[0]
    X = chosen[1]
    kind = ROW_STOCHASTIC if np.abs(X.sum(axis=0) - 1).max() > 1e-9 else DOUBLY_STOCHASTIC
    return LandscapeResult(
        maximizer=StochasticMatrix(X, kind, tol=1e-9),
        f_value=chosen[2],
        pg_norm=chosen[3],
        stability=stability_index(X),
        start_label=chosen[0],
        iterations=chosen[4],
        converged=converged,
        trace=chosen[6],
        ties=tuple(r[0] for r in tied),
        runs=runs,
        min_frob_sq=min_frob,
    )
