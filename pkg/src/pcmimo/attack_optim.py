"""Attacker-side sum-rate minimization and the BS counter-allocation.

Covers the perfect-information attack (closed form via a KKT multiplier
found by bisection), its distance-uncertain stochastic variant (Simpson
quadrature over the annulus laws plus projected gradient), water-filling
at the BS, the alternating best-response game between the two, and the
value-of-information gap between the informed and uninformed attacks.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .channel import AttackVector, LargeScale, Topology
from .config import SystemConfig
from .rates import PowerAllocation, asymptotic_rates
from .simplex import NonConvergenceError, projected_gradient

LN2 = np.log(2.0)


class SolverError(RuntimeError):
    """A deterministic solver step failed (e.g. bisection bracket exhausted)."""


@dataclass(frozen=True)
class P1Coefficients:
    """Per-user constants of the perfect-information attack objective.

    The sum-rate reduces to sum_k log2(1 + Ak / (alpha_k + Bk)) with
        Ak = Pd_k M A z_J^gamma / (u_k z_k^(2 gamma))
        Bk = z_J^gamma / (u_k z_k^gamma) + z_J^gamma / (u_k A P_k L).
    """

    Ak: np.ndarray
    Bk: np.ndarray

    def __post_init__(self):
        if np.any(self.Ak <= 0) or np.any(self.Bk <= 0):
            raise ValueError("Ak and Bk must be positive")
        if not (np.all(np.isfinite(self.Ak)) and np.all(np.isfinite(self.Bk))):
            raise ValueError("Ak and Bk must be finite")

    @classmethod
    def from_topology(
        cls, top: Topology, pa: PowerAllocation, config: SystemConfig
    ) -> "P1Coefficients":
        zJg = top.z_J**config.gamma
        u = config.u
        Ak = pa.pd * config.M * config.A * zJg / (u * top.z ** (2 * config.gamma))
        Bk = zJg / (u * top.z**config.gamma) + zJg / (u * config.A * config.P_pilot * config.L)
        return cls(Ak=Ak, Bk=Bk)


def p1_objective(alpha: np.ndarray, coef: P1Coefficients) -> float:
    """Downlink sum-rate as a function of the attack vector."""
    return float(np.sum(np.log2(1.0 + coef.Ak / (alpha + coef.Bk))))


def p1_gradient(alpha: np.ndarray, coef: P1Coefficients) -> np.ndarray:
    denom = (alpha + coef.Bk) * (alpha + coef.Ak + coef.Bk)
    return -coef.Ak / (denom * LN2)


def _alpha_of_lambda(lam: float, coef: P1Coefficients) -> np.ndarray:
    root = np.sqrt(coef.Ak * (coef.Ak + 4.0 / lam))
    return np.maximum((root - coef.Ak - 2.0 * coef.Bk) / 2.0, 0.0)


def solve_p1_with_multiplier(
    coef: P1Coefficients, budget: float = 1.0
) -> tuple[AttackVector, float]:
    """Closed-form attack plus the KKT multiplier that enforces the budget.

    The multiplier is found by bisection: the allocated total is strictly
    decreasing in it.  Bracket and tolerance follow the solver contract
    (|sum(alpha) - budget| < 1e-10).
    """
    lo = 1e-12
    hi = float(np.max(coef.Ak) / (np.min(coef.Bk) * (np.min(coef.Ak) + np.min(coef.Bk)))) + 1.0
    s_lo = _alpha_of_lambda(lo, coef).sum()
    s_hi = _alpha_of_lambda(hi, coef).sum()
    if s_lo < budget or s_hi > budget:
        raise SolverError(
            "multiplier bracket does not straddle the budget: "
            f"sum(alpha) in [{s_hi:.3e}, {s_lo:.3e}] for lambda in [{lo:.3e}, {hi:.3e}], "
            f"budget={budget}"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = _alpha_of_lambda(mid, coef).sum()
        if abs(s - budget) < 1e-10:
            lo = hi = mid
            break
        if s > budget:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    alpha = _alpha_of_lambda(lam, coef)
    total = alpha.sum()
    if abs(total - budget) > 1e-8:
        raise SolverError(f"bisection ended with sum(alpha)={total}, budget={budget}")
    # Land exactly on the budget face; the relative nudge is ~1e-10.
    alpha *= budget / total
    return AttackVector(alpha), lam


def solve_p1_closed_form(coef: P1Coefficients, budget: float = 1.0) -> AttackVector:
    """Optimal perfect-information pilot contamination for a fixed BS power."""
    return solve_p1_with_multiplier(coef, budget=budget)[0]


def attacker_best_response(
    top: Topology, pa: PowerAllocation, config: SystemConfig, budget: float = 1.0
) -> AttackVector:
    """Closed-form attack against an arbitrary BS allocation.

    Users silenced by the BS (Pd_k = 0) contribute nothing to the sum-rate,
    so the attacker solves the closed form on the powered support only.
    """
    support = pa.pd > 0
    if np.all(support):
        return solve_p1_closed_form(P1Coefficients.from_topology(top, pa, config), budget)
    zJg = top.z_J**config.gamma
    u = config.u[support]
    pilot = config.P_pilot[support]
    z = top.z[support]
    Ak = pa.pd[support] * config.M * config.A * zJg / (u * z ** (2 * config.gamma))
    Bk = zJg / (u * z**config.gamma) + zJg / (u * config.A * pilot * config.L)
    sub, _ = solve_p1_with_multiplier(P1Coefficients(Ak=Ak, Bk=Bk), budget=budget)
    alpha = np.zeros(config.K)
    alpha[support] = sub.alpha
    return AttackVector(alpha)


def kkt_residuals(
    alpha: np.ndarray, lam: float, coef: P1Coefficients
) -> tuple[float, float]:
    """Stationarity (relative, on the support) and complementary-slackness residuals."""
    grad = coef.Ak / ((alpha + coef.Bk) * (alpha + coef.Ak + coef.Bk))
    active = alpha > 0
    stat = 0.0
    if np.any(active):
        stat = float(np.max(np.abs(grad[active] - lam) / lam))
    comp = float(np.max(alpha * np.abs(grad - lam))) if alpha.size else 0.0
    return stat, comp


def solve_p1_numeric(
    objective: Callable[[np.ndarray], float],
    K: int,
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    x0: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    max_iter: int = 100_000,
    budget: float = 1.0,
) -> AttackVector:
    """First-order oracle: projected gradient over {alpha >= 0, sum <= budget}.

    Independent of the closed form; used to cross-check it and as the inner
    engine of the stochastic attack.
    """
    start = np.full(K, budget / (K + 1.0)) if x0 is None else np.asarray(x0, float)
    alpha = projected_gradient(
        objective, start, grad=grad, cap=budget, tol=tol, max_iter=max_iter
    )
    return AttackVector(alpha)


def _quadrature_1d(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Simpson nodes and weights on [lo, hi], including the annulus radial pdf.

    Degenerates to a unit point mass when the interval collapses.
    """
    if hi - lo < 1e-12:
        return np.array([lo]), np.array([1.0])
    h = (hi - lo) / n
    nodes = lo + h * np.arange(n + 1)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= h / 3.0
    pdf = 2.0 * nodes / (hi**2 - lo**2)
    return nodes, w * pdf


def p2_objective_terms(
    config: SystemConfig, pa: PowerAllocation, grid_n: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Precomputed quadrature pieces for the distance-uncertain attack.

    Returns (N, c, uy, w2) where the expected sum-rate is
        sum_k sum_ij w2[i,j] log2(1 + N[k,i] / (alpha_k uy[k,j] + c[k,i])).
    """
    x, wx = _quadrature_1d(config.D_min, config.D_max, grid_n)
    y, wy = _quadrature_1d(config.D_min, config.D_maxJ, grid_n)
    N = pa.pd[:, None] * config.M * config.A * x[None, :] ** (-2 * config.gamma)
    c = x[None, :] ** (-config.gamma) + (1.0 / (config.A * config.P_pilot * config.L))[:, None]
    uy = config.u[:, None] * y[None, :] ** (-config.gamma)
    w2 = np.outer(wx, wy)
    return N, c, uy, w2


def solve_p2(
    config: SystemConfig,
    pa: PowerAllocation,
    grid_n: int = 64,
    tol: float = 1e-8,
) -> AttackVector:
    """Optimal attack when only the distance distributions are known.

    The expectation over the user and attacker annuli is approximated with
    a 2-D Simpson rule and minimized by the projected-gradient engine.
    """
    if grid_n % 2 != 0:
        raise ValueError("grid_n must be even for Simpson quadrature")
    if grid_n < 8:
        raise ValueError("grid_n must be at least 8")
    N, c, uy, w2 = p2_objective_terms(config, pa, grid_n)
    K = config.K

    def objective(alpha: np.ndarray) -> float:
        # denom[k,i,j] = alpha_k uy[k,j] + c[k,i]
        denom = alpha[:, None, None] * uy[:, None, :] + c[:, :, None]
        vals = np.log2(1.0 + N[:, :, None] / denom)
        return float(np.einsum("kij,ij->", vals, w2))

    def gradient(alpha: np.ndarray) -> np.ndarray:
        denom = alpha[:, None, None] * uy[:, None, :] + c[:, :, None]
        inner = -N[:, :, None] * uy[:, None, :] / (denom * (denom + N[:, :, None]) * LN2)
        return np.einsum("kij,ij->k", inner, w2)

    return solve_p1_numeric(objective, K, grad=gradient, tol=tol)


def water_filling(
    ls: LargeScale, attack: AttackVector, config: SystemConfig
) -> PowerAllocation:
    """BS power allocation maximizing the asymptotic sum-rate.

    Pd_k = [eta - phi_k / (M theta_k^2)]^+ with the level eta found by
    bisection (the allocated total increases with it).
    """
    floors = (ls.theta + attack.alpha * config.u * ls.theta_J + config.est_noise_var) / (
        config.M * ls.theta**2
    )
    lo = float(floors.min())
    hi = float(floors.max()) + config.P_A
    target = config.P_A
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        total = np.maximum(mid - floors, 0.0).sum()
        if abs(total - target) <= 1e-13 * target:
            lo = hi = mid
            break
        if total < target:
            lo = mid
        else:
            hi = mid
    eta = 0.5 * (lo + hi)
    pd = np.maximum(eta - floors, 0.0)
    # Guard against the budget check tripping on the last bisection ulp.
    excess = pd.sum() - target
    if excess > 0:
        pd *= target / pd.sum()
    return PowerAllocation(pd, budget=config.P_A)


@dataclass(frozen=True)
class GameState:
    """Converged (or partial) state of the BS-vs-attacker power game."""

    alpha: AttackVector
    pd: PowerAllocation
    iterations: int
    value: float
    trace: tuple = ()


def solve_p3_gauss_seidel(
    config: SystemConfig,
    topology: Topology,
    tol: float = 1e-4,
    max_iter: int = 100,
) -> GameState:
    """Alternating best responses: water-filling BS vs closed-form attacker.

    Starts from no attack; each round plays the BS's exact water-filling
    response and then moves the attacker along its closed-form best-response
    direction with an exact line search on the post-response sum-rate.  The
    line search is what makes the rounds converge: taking the raw best
    response cycles around the saddle, whereas the post-response value
    h(alpha) = R_sum(waterfill(alpha), alpha) is convex and the best-response
    direction can never ascend it, so the damped rounds decrease h
    monotonically and stall only at the equilibrium.

    Stops when the relative value change between rounds falls below tol.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    ls = LargeScale.from_topology(topology, config)

    def bs_response(alpha: AttackVector) -> tuple[float, PowerAllocation]:
        pd = water_filling(ls, alpha, config)
        return asymptotic_rates(ls, alpha, pd, config).sum_rate, pd

    def feasible_span(base: np.ndarray, direction: np.ndarray) -> float:
        s_max = 1.0
        shrink = direction < 0
        if np.any(shrink):
            s_max = min(s_max, float(np.min(base[shrink] / -direction[shrink])))
        total = direction.sum()
        # Directions between full-budget points sum to ~0 up to solver
        # roundoff; only a materially positive sum consumes budget.
        if total > 1e-9:
            s_max = min(s_max, max(1.0 - base.sum(), 0.0) / total)
        return max(s_max, 0.0)

    def line_search(base: np.ndarray, direction: np.ndarray) -> np.ndarray:
        golden = (np.sqrt(5.0) - 1.0) / 2.0
        s_cap = feasible_span(base, direction)
        if s_cap == 0.0:
            return base

        def h(s: float) -> float:
            return bs_response(AttackVector(np.maximum(base + s * direction, 0.0)))[0]

        lo, hi = 0.0, s_cap
        m1 = hi - golden * (hi - lo)
        m2 = lo + golden * (hi - lo)
        f1, f2 = h(m1), h(m2)
        for _ in range(32):
            if f1 <= f2:
                hi, m2, f2 = m2, m1, f1
                m1 = hi - golden * (hi - lo)
                f1 = h(m1)
            else:
                lo, m1, f1 = m1, m2, f2
                m2 = lo + golden * (hi - lo)
                f2 = h(m2)
        s_best = min([(h(s_cap), s_cap), (f1, m1), (f2, m2)])[1]
        return np.maximum(base + s_best * direction, 0.0)

    alpha = AttackVector.zeros(config.K)
    value, pd = bs_response(alpha)
    trace = [value]
    if config.P_J == 0:
        return GameState(alpha, pd, 1, value, tuple(trace))

    previous = alpha.alpha
    for it in range(2, max_iter + 1):
        target = attacker_best_response(topology, pd, config)
        moved = line_search(alpha.alpha, target.alpha - alpha.alpha)
        # Ravine step: best-response directions zig-zag across the valley
        # floor, so also search along the two-round displacement.
        ravine = moved - previous
        if np.any(ravine):
            moved = line_search(moved, ravine)
        previous = alpha.alpha
        alpha = AttackVector(moved)
        new_value, pd = bs_response(alpha)
        trace.append(new_value)
        if abs(new_value - value) <= tol * abs(new_value):
            return GameState(alpha, pd, it, new_value, tuple(trace))
        value = new_value
    raise NonConvergenceError(
        f"Gauss-Seidel did not converge within {max_iter} iterations", trace=trace
    )


def saddle_gaps(
    state: GameState,
    topology: Topology,
    config: SystemConfig,
    rng: np.random.Generator,
    n_deviations: int = 100,
) -> tuple[float, float]:
    """Best relative improvement either player finds among random deviations.

    Returns (attacker_gain, bs_gain): positive values mean the sampled
    unilateral deviation beats the returned state by that relative margin.
    """
    ls = LargeScale.from_topology(topology, config)
    value = state.value
    attacker_gain = 0.0
    bs_gain = 0.0
    for _ in range(n_deviations):
        a = rng.dirichlet(np.ones(config.K))
        if rng.uniform() < 0.5:
            a = a * rng.uniform()
        v = asymptotic_rates(ls, AttackVector(a), state.pd, config).sum_rate
        attacker_gain = max(attacker_gain, (value - v) / value)

        p = rng.dirichlet(np.ones(config.K)) * config.P_A
        if rng.uniform() < 0.5:
            p = p * rng.uniform()
        v = asymptotic_rates(ls, state.alpha, PowerAllocation(p), config).sum_rate
        bs_gain = max(bs_gain, (v - value) / value)
    return attacker_gain, bs_gain


@dataclass(frozen=True)
class EvpiEstimate:
    """Monte Carlo value-of-perfect-information estimate with its standard error."""

    value: float
    stderr: float
    n: int


def evpi(
    config: SystemConfig,
    pa_strategy: PowerAllocation,
    n_topologies: int,
    rng: np.random.Generator,
    grid_n: int = 64,
) -> EvpiEstimate:
    """Expected sum-rate gap between the uninformed and informed attacks.

    The uninformed attack is solved once from the distance distributions;
    the informed one is re-solved per sampled topology.  Paired differences
    keep the estimate nonnegative realization by realization.
    """
    from .channel import sample_topology

    if n_topologies < 1:
        raise ValueError("n_topologies must be >= 1")
    alpha_unc = solve_p2(config, pa_strategy, grid_n=grid_n)
    diffs = np.empty(n_topologies)
    for i in range(n_topologies):
        top = sample_topology(rng, config)
        ls = LargeScale.from_topology(top, config)
        coef = P1Coefficients.from_topology(top, pa_strategy, config)
        alpha_pi = solve_p1_closed_form(coef)
        r_unc = asymptotic_rates(ls, alpha_unc, pa_strategy, config).sum_rate
        r_pi = asymptotic_rates(ls, alpha_pi, pa_strategy, config).sum_rate
        diffs[i] = r_unc - r_pi
    stderr = float(diffs.std(ddof=1) / np.sqrt(n_topologies)) if n_topologies > 1 else 0.0
    return EvpiEstimate(value=float(diffs.mean()), stderr=stderr, n=n_topologies)
