"""Attacks that minimize the largest per-user secrecy rate.

The exact min-max problem is nonconvex, so three routes are provided: a
brute-force simplex grid (small K benchmark), a greedy descent on a convex
upper bound of each user's secrecy rate, and a chance-constrained variant
of the greedy for the case where user distances are unknown.
"""

from dataclasses import dataclass
from math import comb

import numpy as np

from .channel import AttackVector, Topology, sample_topology, LargeScale
from .config import SystemConfig
from .rates import PowerAllocation, asymptotic_rates, leakage_rates

# Hard ceiling on brute-force grid size before advising the greedy bound.
GRID_BUDGET = 5_000_000


class CapacityError(ValueError):
    """The requested brute-force grid is too large to enumerate."""


@dataclass(frozen=True)
class SecrecyCoefficients:
    """Per-user constants of the secrecy objective.

    Ak, Bk match the sum-rate attack; Gk = Pd_k theta_J scales the leakage
    terms; Ik and Ik_hat are the interference bounds for the known- and
    unknown-distance cases.
    """

    Ak: np.ndarray
    Bk: np.ndarray
    Gk: np.ndarray
    Ik: np.ndarray
    Ik_hat: np.ndarray
    pd: np.ndarray
    z_J: float
    config: SystemConfig

    @classmethod
    def from_topology(
        cls, top: Topology, pa: PowerAllocation, config: SystemConfig
    ) -> "SecrecyCoefficients":
        from .attack_optim import P1Coefficients

        p1 = P1Coefficients.from_topology(top, pa, config)
        theta_J = config.A * top.z_J ** (-config.gamma)
        Gk = pa.pd * theta_J
        ratio = Gk / p1.Bk
        Ik = ratio.sum() - ratio
        # Unknown distances: every interferer at full contamination and
        # pushed to the annulus edge.
        u = config.u
        zJg = top.z_J ** (-config.gamma)
        hat_terms = (
            pa.pd * config.A * u * top.z_J ** (-2 * config.gamma)
        ) / (u * zJg + config.D_max ** (-config.gamma) + 1.0 / (config.A * config.P_pilot * config.L))
        Ik_hat = hat_terms.sum() - hat_terms
        return cls(
            Ak=p1.Ak, Bk=p1.Bk, Gk=Gk, Ik=Ik, Ik_hat=Ik_hat,
            pd=pa.pd, z_J=float(top.z_J), config=config,
        )


def secrecy_values(alpha: np.ndarray, coef: SecrecyCoefficients) -> np.ndarray:
    """Exact per-user secrecy differences R_k - Re_k (can be -inf or +inf)."""
    R = np.log2(1.0 + coef.Ak / (alpha + coef.Bk))
    S = coef.Gk * alpha / (alpha + coef.Bk)
    interference = S.sum() - S
    Re = np.zeros_like(S)
    pos = S > 0
    with np.errstate(divide="ignore"):
        Re[pos] = np.log2(1.0 + S[pos] / interference[pos])
    return R - Re


def secrecy_upper_bounds(alpha: np.ndarray, coef: SecrecyCoefficients) -> np.ndarray:
    """Per-user bounds U_k = R_k - log2(1 + Gk alpha_k / ((alpha_k + Bk) Ik))."""
    R = np.log2(1.0 + coef.Ak / (alpha + coef.Bk))
    return R - np.log2(1.0 + coef.Gk * alpha / ((alpha + coef.Bk) * coef.Ik))


def _grid_points(K: int, g: int) -> np.ndarray:
    """All nonnegative integer vectors of length K with sum <= g."""
    if K == 1:
        return np.arange(g + 1, dtype=np.int64)[:, None]
    rows = []
    prefix = np.zeros(K, dtype=np.int64)

    def rec(pos: int, remaining: int):
        if pos == K - 1:
            for v in range(remaining + 1):
                prefix[pos] = v
                rows.append(prefix.copy())
            return
        for v in range(remaining + 1):
            prefix[pos] = v
            rec(pos + 1, remaining - v)

    rec(0, g)
    return np.asarray(rows)


def solve_p4_bruteforce(
    coef: SecrecyCoefficients, grid_res: float = 1 / 50
) -> tuple[AttackVector, float]:
    """Exhaustive search of the discretized simplex for the min-max secrecy.

    Uses the exact secrecy expressions (with eavesdropper interference), so
    it benchmarks the greedy bound.  Only viable for small K.
    """
    K = coef.Ak.size
    g = int(round(1.0 / grid_res))
    if comb(g + K, K) > GRID_BUDGET:
        raise CapacityError(
            f"grid of {comb(g + K, K)} points exceeds the brute-force budget; "
            "use solve_p5_greedy instead"
        )
    grid = _grid_points(K, g).astype(float) * grid_res

    best_nu = np.inf
    best_alpha = None
    chunk = 100_000
    for start in range(0, grid.shape[0], chunk):
        block = grid[start : start + chunk]
        R = np.log2(1.0 + coef.Ak[None, :] / (block + coef.Bk[None, :]))
        S = coef.Gk[None, :] * block / (block + coef.Bk[None, :])
        interference = S.sum(axis=1, keepdims=True) - S
        Re = np.zeros_like(S)
        pos = S > 0
        with np.errstate(divide="ignore"):
            ratio = np.divide(S, interference, out=np.full_like(S, np.inf), where=interference > 0)
            Re[pos] = np.log2(1.0 + ratio[pos])
        nu = np.maximum((R - Re).max(axis=1), 0.0)
        i = int(np.argmin(nu))
        if nu[i] < best_nu:
            best_nu = float(nu[i])
            best_alpha = block[i]
    return AttackVector(best_alpha), best_nu


def p5_constraint_values(alpha: np.ndarray, coef: SecrecyCoefficients) -> np.ndarray:
    """f_k(alpha_k) = Ik (alpha_k + Ak + Bk) / (alpha_k (Ik + Gk) + Bk Ik).

    Equal to 2**U_k; strictly decreasing in alpha_k.
    """
    num = coef.Ik * (alpha + coef.Ak + coef.Bk)
    den = alpha * (coef.Ik + coef.Gk) + coef.Bk * coef.Ik
    return num / den


def _greedy_min_max(f_values, K: int, delta: float) -> tuple[np.ndarray, float]:
    """Greedy budget allocation lowering the largest constraint value.

    Repeatedly pours delta onto the argmax user (lowest index on ties)
    until the budget is spent or the objective would drop below 1.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    alpha = np.zeros(K)
    while True:
        f = f_values(alpha)
        nu_hat = float(f.max())
        if nu_hat <= 1.0:
            break
        remaining = 1.0 - alpha.sum()
        if remaining <= 0:
            break
        i = int(np.argmax(f))
        alpha[i] += min(delta, remaining)
    nu_hat = max(float(f_values(alpha).max()), 1.0)
    return alpha, nu_hat


def solve_p5_greedy(
    coef: SecrecyCoefficients, delta: float = 1e-3
) -> tuple[AttackVector, float]:
    """Greedy minimization of the secrecy upper bound (known distances).

    Returns the attack and nu_hat = max_k f_k; log2(nu_hat) upper-bounds
    every user's achievable secrecy rate under this attack.
    """
    alpha, nu_hat = _greedy_min_max(
        lambda a: p5_constraint_values(a, coef), coef.Ak.size, delta
    )
    return AttackVector(alpha), nu_hat


def chance_constraint_lhs(
    coef: SecrecyCoefficients, alpha: np.ndarray, epsilon: float
) -> np.ndarray:
    """Per-user chance-constraint bound, strictly decreasing in alpha_k.

    Derived from the annulus CDF of the unknown user distance; epsilon is
    the tolerated fraction of users exceeding the secrecy threshold.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    cfg = coef.config
    Q = (epsilon * (cfg.D_max**2 - cfg.D_min**2) + cfg.D_min**2) ** cfg.gamma
    u = cfg.u
    zJg = coef.z_J ** (-cfg.gamma)
    est = 1.0 / (cfg.A * cfg.P_pilot * cfg.L)
    jam = alpha * u * zJg + est
    num = coef.Ik_hat * (coef.pd * cfg.M * cfg.A + 1.0 + Q * jam)
    den = coef.Ik_hat + Q * (
        coef.pd * alpha * u * cfg.A * coef.z_J ** (-2 * cfg.gamma) + coef.Ik_hat * jam
    )
    return num / den


def solve_p5_chance(
    coef: SecrecyCoefficients, epsilon: float, delta: float = 1e-3
) -> tuple[AttackVector, float]:
    """Greedy chance-constrained attack for unknown user distances."""
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    alpha, nu_hat = _greedy_min_max(
        lambda a: chance_constraint_lhs(coef, a, epsilon), coef.Ak.size, delta
    )
    return AttackVector(alpha), nu_hat


@dataclass(frozen=True)
class ChanceValidation:
    """Monte Carlo check of a chance-constrained attack."""

    exceedance: float          # fraction of user draws with R - Re >= log2(nu_hat)
    exceedance_stderr: float
    zero_secrecy: float        # fraction with R - Re <= 0
    mean_max_secrecy: float    # mean over topologies of max_k [R-Re]^+
    n_samples: int


def validate_chance_solution(
    attack: AttackVector,
    nu_hat: float,
    z_J: float,
    pa: PowerAllocation,
    config: SystemConfig,
    rng: np.random.Generator,
    n_topologies: int = 500,
) -> ChanceValidation:
    """Sample user layouts (attacker fixed at z_J) and measure exceedances.

    Secrecy is evaluated with the exact asymptotic expressions, before the
    [.]^+ clamp, so "zero secrecy" counts users whose leakage exceeds their
    rate.
    """
    nu = np.log2(nu_hat)
    exceed = 0
    zero = 0
    total = 0
    max_secrecy = np.empty(n_topologies)
    for i in range(n_topologies):
        top = sample_topology(rng, config)
        top = Topology(z=top.z, z_J=z_J, z_Jk=None)
        ls = LargeScale.from_topology(top, config)
        R = asymptotic_rates(ls, attack, pa, config).R
        Re = leakage_rates(ls, attack, pa, config)
        diff = R - Re
        exceed += int(np.count_nonzero(diff >= nu))
        zero += int(np.count_nonzero(diff <= 0))
        total += diff.size
        max_secrecy[i] = max(float(np.max(diff)), 0.0)
    frac = exceed / total
    stderr = float(np.sqrt(max(frac * (1 - frac), 1e-12) / total))
    return ChanceValidation(
        exceedance=frac,
        exceedance_stderr=stderr,
        zero_secrecy=zero / total,
        mean_max_secrecy=float(max_secrecy.mean()),
        n_samples=total,
    )
