"""Two-stage hybrid attack: pilot contamination now, data-phase jamming later.

The first-stage pilot fractions are committed before the attacker sees its
channels to the users; the second-stage jamming fractions adapt to each
channel realization.  The expectation over realizations is replaced by a
sample average over T equiprobable scenarios, giving a convex program with
K first-stage and N*T second-stage variables under one frame-energy budget
per scenario.

Solution approach: for a fixed pilot-phase energy share the feasible sets
of the first- and second-stage blocks decouple, so block-coordinate
projected gradient converges; the scalar share is then minimized by a
golden-section search (the partial minimum is convex in the share).
Alternating the raw blocks directly would stall: each block's gradient is
monotone, so whichever block moves first consumes the whole frame budget.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import AttackVector, Topology
from .config import SystemConfig
from .rates import PowerAllocation
from .simplex import project_capped_simplex, projected_gradient

LN2 = np.log(2.0)
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ScenarioSet:
    """Equiprobable attacker-side channel draws for the sample average."""

    gJk: np.ndarray  # (T, N, K) complex small-scale gains

    def __post_init__(self):
        if self.gJk.ndim != 3:
            raise ValueError("gJk must have shape (T, N, K)")
        if not np.all(np.isfinite(self.gJk)):
            raise ValueError("scenario gains must be finite")

    @property
    def T(self) -> int:
        return self.gJk.shape[0]

    @property
    def N(self) -> int:
        return self.gJk.shape[1]

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.T, 1.0 / self.T)

    def subset_antennas(self, n: int) -> "ScenarioSet":
        """First n antennas of every scenario (nested feasible sets)."""
        return ScenarioSet(self.gJk[:, :n, :])


def build_scenarios(rng: np.random.Generator, N: int, K: int, T: int) -> ScenarioSet:
    """Draw T i.i.d. standard complex Gaussian gain matrices."""
    if min(N, K, T) < 1:
        raise ValueError("N, K and T must be >= 1")
    g = (rng.standard_normal((T, N, K)) + 1j * rng.standard_normal((T, N, K))) / np.sqrt(2.0)
    return ScenarioSet(gJk=g)


@dataclass(frozen=True)
class HybridPolicy:
    """First-stage pilot fractions plus per-scenario jamming fractions."""

    alpha: AttackVector
    beta: np.ndarray  # (T, N)
    value: float
    pilot_share: float


class _Problem:
    """Precomputed constants of the sample-average objective."""

    def __init__(self, config: SystemConfig, topology: Topology,
                 pa: PowerAllocation, scenarios: ScenarioSet):
        if topology.z_Jk is None:
            raise ValueError("topology must carry attacker-user distances")
        g = config.gamma
        self.C = pa.pd * config.M * config.A * topology.z ** (-2 * g)
        self.d0 = topology.z ** (-g) + 1.0 / (config.A * config.P_pilot * config.L)
        self.w = config.u * topology.z_J ** (-g)
        theta_Jk = config.A * topology.z_Jk ** (-g)
        self.q = config.P_J * np.abs(scenarios.gJk) ** 2 * theta_Jk[None, None, :]
        self.T = scenarios.T
        self.N = scenarios.N
        self.K = config.K

    def jam_power(self, beta: np.ndarray) -> np.ndarray:
        """E[t, k] = sum_i beta[t, i] q[t, i, k]."""
        return np.einsum("ti,tik->tk", beta, self.q)

    def value(self, alpha: np.ndarray, beta: np.ndarray) -> float:
        D = self.d0 + self.w * alpha
        J = self.jam_power(beta) + 1.0
        return float(np.log2(1.0 + self.C / (D[None, :] * J)).sum() / self.T)

    def alpha_grad(self, alpha: np.ndarray, J: np.ndarray) -> np.ndarray:
        D = self.d0 + self.w * alpha
        inner = self.C[None, :] * self.w[None, :] / (D[None, :] * (D[None, :] * J + self.C[None, :]))
        return -inner.sum(axis=0) / (self.T * LN2)

    def beta_grad(self, beta: np.ndarray, a: np.ndarray) -> np.ndarray:
        J = self.jam_power(beta) + 1.0
        r = a[None, :] / (J * (J + a[None, :]))
        return -np.einsum("tik,tk->ti", self.q, r) / (self.T * LN2)


def _solve_beta_block(prob: _Problem, alpha: np.ndarray, beta0: np.ndarray,
                      cap: float, tol: float, max_iter: int = 20_000) -> np.ndarray:
    """Projected gradient on all second-stage blocks at once.

    Given alpha the objective separates across scenarios, so a joint step
    with row-wise projection solves every block.
    """
    D = prob.d0 + prob.w * alpha
    a = prob.C / D

    def project(B):
        return np.stack([project_capped_simplex(row, cap) for row in B])

    def value(B):
        J = prob.jam_power(B) + 1.0
        return float(np.log2(1.0 + a[None, :] / J).sum() / prob.T)

    beta = project(beta0)
    fb = value(beta)
    step = 1.0
    for _ in range(max_iter):
        g = prob.beta_grad(beta, a)
        if np.max(np.abs(beta - project(beta - g))) < tol:
            return beta
        moved = False
        for _ in range(80):
            cand = project(beta - step * g)
            d = cand - beta
            if not np.any(d):
                if step >= 1.0:
                    return beta
                step *= 4.0
                continue
            f_new = value(cand)
            if f_new <= fb + 1e-4 * np.sum(g * d):
                beta, fb = cand, f_new
                step = min(step * 1.5, 1e12)
                moved = True
                break
            step *= 0.5
        if not moved:
            return beta
    return beta


def _solve_fixed_share(prob: _Problem, config: SystemConfig, share: float,
                       alpha0: np.ndarray, beta0: np.ndarray, tol: float,
                       max_passes: int = 60) -> tuple[float, np.ndarray, np.ndarray]:
    """Block-coordinate descent at a fixed pilot-phase energy share."""
    frame = config.t_p + config.t_d
    beta_cap = max((frame - config.t_p * share) / config.t_d, 0.0)
    alpha = project_capped_simplex(alpha0, share)
    beta = beta0
    prev = np.inf
    for _ in range(max_passes):
        beta = _solve_beta_block(prob, alpha, beta, beta_cap, tol)
        J = prob.jam_power(beta) + 1.0

        def f_alpha(a, J=J):
            D = prob.d0 + prob.w * a
            return float(np.log2(1.0 + prob.C[None, :] / (D[None, :] * J)).sum() / prob.T)

        alpha = projected_gradient(
            f_alpha, alpha, grad=lambda a: prob.alpha_grad(a, J),
            cap=share, tol=tol, max_iter=20_000,
        )
        val = prob.value(alpha, beta)
        if prev - val <= max(tol, 1e-10 * abs(val)):
            return val, alpha, beta
        prev = val
    return prev, alpha, beta


def solve_p6_saa(
    config: SystemConfig,
    topology: Topology,
    pa: PowerAllocation,
    scenarios: ScenarioSet,
    tol: float = 1e-6,
    init_policy: Optional[HybridPolicy] = None,
    share_tol: float = 1e-3,
) -> HybridPolicy:
    """Minimize the sample-average sum-rate over first- and second-stage power.

    Returns the best policy found over the golden-section sweep of the
    pilot share; with an init_policy its share is included as a candidate,
    so the result never falls behind the starting point.
    """
    prob = _Problem(config, topology, pa, scenarios)
    frame = config.t_p + config.t_d
    share_max = frame / config.t_p

    if config.P_J == 0:
        alpha = np.zeros(config.K)
        beta = np.zeros((prob.T, prob.N))
        return HybridPolicy(AttackVector(alpha), beta, prob.value(alpha, beta), 0.0)

    if config.t_d == 0:
        # No data phase: the whole budget belongs to the pilots.
        from .attack_optim import P1Coefficients, solve_p1_closed_form

        coef = P1Coefficients.from_topology(topology, pa, config)
        alpha = solve_p1_closed_form(coef, budget=share_max).alpha
        beta = np.zeros((prob.T, prob.N))
        return HybridPolicy(AttackVector(alpha), beta, prob.value(alpha, beta),
                            float(alpha.sum()))

    warm_alpha = np.zeros(config.K)
    warm_beta = np.zeros((prob.T, prob.N))
    cache: dict[float, tuple[float, np.ndarray, np.ndarray]] = {}

    def g(share: float) -> float:
        nonlocal warm_alpha, warm_beta
        if share in cache:
            return cache[share][0]
        val, alpha, beta = _solve_fixed_share(
            prob, config, share, warm_alpha, warm_beta, tol
        )
        cache[share] = (val, alpha, beta)
        warm_alpha, warm_beta = alpha, beta
        return val

    candidates = [0.0, share_max]
    if init_policy is not None:
        share0 = float(np.clip(init_policy.alpha.alpha.sum(), 0.0, share_max))
        warm_alpha = init_policy.alpha.alpha.copy()
        b0 = init_policy.beta
        warm_beta = np.zeros((prob.T, prob.N))
        warm_beta[:, : b0.shape[1]] = b0
        candidates.append(share0)
    for s in candidates:
        g(s)

    lo, hi = 0.0, share_max
    m1 = hi - GOLDEN * (hi - lo)
    m2 = lo + GOLDEN * (hi - lo)
    f1, f2 = g(m1), g(m2)
    while hi - lo > share_tol * share_max:
        if f1 <= f2:
            hi, m2, f2 = m2, m1, f1
            m1 = hi - GOLDEN * (hi - lo)
            f1 = g(m1)
        else:
            lo, m1, f1 = m1, m2, f2
            m2 = lo + GOLDEN * (hi - lo)
            f2 = g(m2)

    best_share = min(cache, key=lambda s: cache[s][0])
    val, alpha, beta = cache[best_share]
    return HybridPolicy(AttackVector(alpha), beta, val, float(alpha.sum()))


def pc_only_policy(
    config: SystemConfig,
    topology: Topology,
    pa: PowerAllocation,
    scenarios: ScenarioSet,
) -> HybridPolicy:
    """Pilot-contamination-only baseline at the full frame-energy budget."""
    from .attack_optim import P1Coefficients, solve_p1_closed_form

    prob = _Problem(config, topology, pa, scenarios)
    share_max = (config.t_p + config.t_d) / config.t_p
    coef = P1Coefficients.from_topology(topology, pa, config)
    alpha = solve_p1_closed_form(coef, budget=share_max).alpha
    beta = np.zeros((prob.T, prob.N))
    return HybridPolicy(AttackVector(alpha), beta, prob.value(alpha, beta),
                        float(alpha.sum()))


def jamming_only_policy(
    config: SystemConfig,
    topology: Topology,
    pa: PowerAllocation,
    scenarios: ScenarioSet,
    tol: float = 1e-6,
) -> HybridPolicy:
    """Data-phase-only jamming baseline (no pilot contamination)."""
    prob = _Problem(config, topology, pa, scenarios)
    frame = config.t_p + config.t_d
    if config.t_d == 0:
        beta = np.zeros((prob.T, prob.N))
        alpha = np.zeros(config.K)
        return HybridPolicy(AttackVector(alpha), beta, prob.value(alpha, beta), 0.0)
    cap = frame / config.t_d
    alpha = np.zeros(config.K)
    beta = _solve_beta_block(prob, alpha, np.zeros((prob.T, prob.N)), cap, tol)
    return HybridPolicy(AttackVector(alpha), beta, prob.value(alpha, beta), 0.0)


def policy_value(
    policy: HybridPolicy,
    config: SystemConfig,
    topology: Topology,
    pa: PowerAllocation,
    scenarios: ScenarioSet,
) -> float:
    """Sample-average sum-rate of an arbitrary policy on given scenarios."""
    prob = _Problem(config, topology, pa, scenarios)
    return prob.value(policy.alpha.alpha, policy.beta)


def policy_feasible(policy: HybridPolicy, config: SystemConfig, atol: float = 1e-9) -> bool:
    """Check nonnegativity and the per-scenario frame-energy budget."""
    alpha = policy.alpha.alpha
    if np.any(alpha < -atol) or np.any(policy.beta < -atol):
        return False
    frame = config.t_p + config.t_d
    spend = config.t_p * alpha.sum() + config.t_d * policy.beta.sum(axis=1)
    return bool(np.all(spend <= frame * (1 + 1e-9)))


@dataclass(frozen=True)
class OutOfSampleReport:
    """Fresh-scenario evaluation of a committed first stage."""

    mean: float
    stderr: float
    values: np.ndarray


def evaluate_policy_out_of_sample(
    policy: HybridPolicy,
    fresh_scenarios: ScenarioSet,
    config: SystemConfig,
    topology: Topology,
    pa: PowerAllocation,
    tol: float = 1e-6,
) -> OutOfSampleReport:
    """Re-optimize the second stage per fresh scenario with alpha held fixed."""
    prob = _Problem(config, topology, pa, fresh_scenarios)
    alpha = policy.alpha.alpha
    frame = config.t_p + config.t_d
    cap = max((frame - config.t_p * alpha.sum()) / config.t_d, 0.0) if config.t_d > 0 else 0.0
    beta = _solve_beta_block(prob, alpha, np.zeros((prob.T, prob.N)), cap, tol)
    D = prob.d0 + prob.w * alpha
    J = prob.jam_power(beta) + 1.0
    values = np.log2(1.0 + prob.C[None, :] / (D[None, :] * J)).sum(axis=1)
    stderr = float(values.std(ddof=1) / np.sqrt(prob.T)) if prob.T > 1 else 0.0
    return OutOfSampleReport(mean=float(values.mean()), stderr=stderr, values=values)
