"""Downlink rate, leakage and secrecy computations.

Everything returns spectral efficiency in bit/s/Hz (log base 2); the
harness converts to Mbps.  `exact_rates` evaluates the finite-M Monte
Carlo expression from drawn channels; the `asymptotic_*` functions use the
channel-hardening limits, which depend only on large-scale gains.
"""

from dataclasses import dataclass

import numpy as np

from .channel import AttackVector, ChannelRealization, EstimatedChannels, LargeScale, true_channels
from .config import SystemConfig

# Cap used when a contaminated user has no co-contaminated peers, which
# drives the interference-free leakage rate to +inf.
LEAKAGE_CAP = 60.0


@dataclass(frozen=True)
class PowerAllocation:
    """Downlink powers per user; budget check is optional at construction."""

    pd: np.ndarray
    budget: float | None = None

    def __post_init__(self):
        pd = np.asarray(self.pd, dtype=float)
        object.__setattr__(self, "pd", pd)
        if np.any(pd < 0):
            raise ValueError("downlink powers must be nonnegative")
        if self.budget is not None and pd.sum() > self.budget * (1 + 1e-9):
            raise ValueError("downlink powers exceed the budget")

    @classmethod
    def uniform(cls, config: SystemConfig) -> "PowerAllocation":
        return cls(np.full(config.K, config.P_A / config.K), budget=config.P_A)


@dataclass(frozen=True)
class RateReport:
    """Per-user rates with their sum and Jain fairness index."""

    R: np.ndarray
    sum_rate: float
    fairness: float

    @classmethod
    def from_rates(cls, R: np.ndarray) -> "RateReport":
        return cls(R=R, sum_rate=float(R.sum()), fairness=jain_fairness(R))


@dataclass(frozen=True)
class SecrecyReport:
    """Per-user rate, leakage and clamped secrecy rates."""

    R: np.ndarray
    Re: np.ndarray
    Rs: np.ndarray
    max_secrecy: float
    leakage_saturated: bool = False


def jain_fairness(R: np.ndarray) -> float:
    """(sum R)^2 / (K * sum R^2); all-zero rate vectors count as fair."""
    R = np.asarray(R, dtype=float)
    total_sq = R.sum() ** 2
    denom = R.size * np.sum(R**2)
    if denom == 0.0:
        return 1.0
    return float(total_sq / denom)


def phi(ls: LargeScale, attack: AttackVector, config: SystemConfig) -> np.ndarray:
    """Effective estimate power theta_k + alpha_k u_k theta_J + 1/(P_k L)."""
    return ls.theta + attack.alpha * config.u * ls.theta_J + config.est_noise_var


def exact_rates(
    real: ChannelRealization,
    ls: LargeScale,
    est: EstimatedChannels,
    pa: PowerAllocation,
) -> RateReport:
    """Finite-M downlink rates with MRT precoding and full inter-user interference."""
    h = true_channels(real, ls)
    # cross[k, l] = |h_k v_l^T|^2
    cross = np.abs(h @ est.v.T) ** 2
    weighted = pa.pd[None, :] * cross
    signal = np.diagonal(weighted)
    interference = weighted.sum(axis=1) - signal
    R = np.log2(1.0 + signal / (interference + 1.0))
    return RateReport.from_rates(R)


def asymptotic_rates(
    ls: LargeScale,
    attack: AttackVector,
    pa: PowerAllocation,
    config: SystemConfig,
) -> RateReport:
    """Large-M rates: R_k = log2(1 + Pd_k M theta_k^2 / phi_k)."""
    sinr = pa.pd * config.M * ls.theta**2 / phi(ls, attack, config)
    return RateReport.from_rates(np.log2(1.0 + sinr))


def leakage_signal_terms(
    ls: LargeScale,
    attack: AttackVector,
    pa: PowerAllocation,
    config: SystemConfig,
) -> np.ndarray:
    """Large-M eavesdropper receive powers Pd_k alpha_k u_k theta_J^2 / phi_k."""
    return pa.pd * attack.alpha * config.u * ls.theta_J**2 / phi(ls, attack, config)


def leakage_rates(
    ls: LargeScale,
    attack: AttackVector,
    pa: PowerAllocation,
    config: SystemConfig,
    cap: float = LEAKAGE_CAP,
) -> np.ndarray:
    """Large-M per-user leakage rates at the attacker.

    A user contaminated alone has no interference masking its signal at the
    attacker, so its leakage diverges; such entries saturate at `cap`.
    """
    S = leakage_signal_terms(ls, attack, pa, config)
    interference = S.sum() - S
    Re = np.zeros_like(S)
    active = S > 0
    with np.errstate(divide="ignore"):
        Re[active] = np.log2(1.0 + S[active] / interference[active])
    return np.minimum(Re, cap)


def exact_leakage_rates(
    real: ChannelRealization,
    ls: LargeScale,
    est: EstimatedChannels,
    pa: PowerAllocation,
) -> np.ndarray:
    """Finite-M leakage rates from drawn channels (Monte Carlo counterpart)."""
    h_J = np.sqrt(ls.theta_J) * real.g_J
    recv = pa.pd * np.abs(est.v @ h_J) ** 2
    interference = recv.sum() - recv
    return np.log2(1.0 + recv / (interference + 1.0))


def secrecy_report(
    ls: LargeScale,
    attack: AttackVector,
    pa: PowerAllocation,
    config: SystemConfig,
    cap: float = LEAKAGE_CAP,
) -> SecrecyReport:
    """Combine asymptotic rates and leakage into clamped secrecy rates."""
    R = asymptotic_rates(ls, attack, pa, config).R
    Re = leakage_rates(ls, attack, pa, config, cap=cap)
    Rs = np.maximum(R - Re, 0.0)
    return SecrecyReport(
        R=R,
        Re=Re,
        Rs=Rs,
        max_secrecy=float(Rs.max()),
        leakage_saturated=bool(np.any(Re >= cap)),
    )


def hybrid_sum_rate(
    ls: LargeScale,
    attack: AttackVector,
    beta: np.ndarray,
    g_Jk: np.ndarray,
    pa: PowerAllocation,
    config: SystemConfig,
) -> RateReport:
    """Large-M rates under combined pilot contamination and data-phase jamming.

    Args:
        beta: (N,) jamming power fractions for one channel scenario.
        g_Jk: (N, K) attacker-antenna-to-user small-scale gains.
    """
    if ls.theta_Jk is None:
        raise ValueError("LargeScale.theta_Jk required for hybrid rates")
    beta = np.asarray(beta, dtype=float)
    jam = (beta[:, None] * config.P_J * np.abs(g_Jk) ** 2 * ls.theta_Jk[None, :]).sum(axis=0)
    sinr = pa.pd * config.M * ls.theta**2 / (phi(ls, attack, config) * (jam + 1.0))
    return RateReport.from_rates(np.log2(1.0 + sinr))
