"""Topology sampling, channel realizations and MRT precoding.

Users and the attacker are dropped uniformly at random in annuli centered
on the BS.  Small-scale fading is i.i.d. Rayleigh; pilots are orthonormal
and never materialized, so pilot-phase estimation reduces to its projected
form: the estimate of user k's channel is the true channel plus (under
attack) a scaled copy of the attacker channel plus estimation noise.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import SystemConfig


class DegenerateEstimateError(RuntimeError):
    """A channel estimate collapsed to the zero vector (measure-zero event)."""


@dataclass(frozen=True)
class Topology:
    """Distances from the BS to users and attacker, plus attacker-user gaps."""

    z: np.ndarray          # (K,) BS-user distances
    z_J: float             # BS-attacker distance
    z_Jk: Optional[np.ndarray] = None  # (K,) attacker-user distances

    def __post_init__(self):
        if np.any(np.asarray(self.z) <= 0) or self.z_J <= 0:
            raise ValueError("distances must be strictly positive")


@dataclass(frozen=True)
class LargeScale:
    """Path gains derived from a topology."""

    theta: np.ndarray      # (K,)
    theta_J: float
    theta_Jk: Optional[np.ndarray] = None

    @classmethod
    def from_topology(cls, top: Topology, config: SystemConfig) -> "LargeScale":
        theta_Jk = None
        if top.z_Jk is not None:
            theta_Jk = path_gain(top.z_Jk, config)
        return cls(
            theta=path_gain(top.z, config),
            theta_J=float(path_gain(top.z_J, config)),
            theta_Jk=theta_Jk,
        )


@dataclass(frozen=True)
class AttackVector:
    """Pilot power fractions alpha, nonnegative with sum at most the budget."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        object.__setattr__(self, "alpha", a)
        if np.any(a < -1e-12):
            raise ValueError("alpha entries must be nonnegative")
        # Budget 1 is the pilot-phase power constraint; hybrid policies may
        # legitimately exceed it (frame-average budget), so only sanity-check.
        if a.sum() > 1e6:
            raise ValueError("alpha sum implausibly large")

    @classmethod
    def zeros(cls, K: int) -> "AttackVector":
        return cls(np.zeros(K))

    @classmethod
    def uniform(cls, K: int, budget: float = 1.0) -> "AttackVector":
        return cls(np.full(K, budget / K))

    @classmethod
    def single_user(cls, K: int, j: int) -> "AttackVector":
        a = np.zeros(K)
        a[j] = 1.0
        return cls(a)


@dataclass(frozen=True)
class ChannelRealization:
    """Small-scale fading draws plus pilot-phase estimation noise.

    G:    (K, M) user small-scale gains, standard complex Gaussian.
    g_J:  (M,) attacker small-scale gains.
    West: (K, M) estimation-noise vectors with per-entry variance
          1 / (P_pilot[k] * L).
    G_Jk: (N, K) attacker-side gains toward users (hybrid attack only).
    """

    G: np.ndarray
    g_J: np.ndarray
    West: np.ndarray
    G_Jk: Optional[np.ndarray] = None


@dataclass(frozen=True)
class EstimatedChannels:
    """Per-user channel estimates and the unit-norm MRT precoders built from them."""

    h_hat: np.ndarray  # (K, M)
    v: np.ndarray      # (K, M), each row unit norm


def path_gain(distance: np.ndarray, config: SystemConfig) -> np.ndarray:
    """Distance-based power gain A * d**(-gamma)."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return config.A * d ** (-config.gamma)


def _annulus_radii(rng: np.random.Generator, n: int, r_min: float, r_max: float) -> np.ndarray:
    # Inverse CDF of the uniform-in-annulus radial law.
    u = rng.uniform(size=n)
    return np.sqrt(r_min**2 + u * (r_max**2 - r_min**2))


def sample_topology(rng: np.random.Generator, config: SystemConfig) -> Topology:
    """Draw one network layout: user and attacker positions around the BS.

    Radii follow the uniform-in-annulus law; angles are uniform, which pins
    down the attacker-user distances z_Jk.
    """
    z = _annulus_radii(rng, config.K, config.D_min, config.D_max)
    z_J = float(_annulus_radii(rng, 1, config.D_min, config.D_maxJ)[0])
    ang = rng.uniform(0.0, 2.0 * np.pi, size=config.K)
    ang_J = rng.uniform(0.0, 2.0 * np.pi)
    dx = z * np.cos(ang) - z_J * np.cos(ang_J)
    dy = z * np.sin(ang) - z_J * np.sin(ang_J)
    z_Jk = np.hypot(dx, dy)
    return Topology(z=z, z_J=z_J, z_Jk=z_Jk)


def _complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channel(
    rng: np.random.Generator,
    config: SystemConfig,
    n_attacker_antennas: int = 0,
) -> ChannelRealization:
    """Draw small-scale gains and estimation noise for one realization."""
    G = _complex_normal(rng, (config.K, config.M))
    g_J = _complex_normal(rng, config.M)
    West = _complex_normal(rng, (config.K, config.M))
    West = West * np.sqrt(config.est_noise_var)[:, None]
    G_Jk = None
    if n_attacker_antennas > 0:
        G_Jk = _complex_normal(rng, (n_attacker_antennas, config.K))
    return ChannelRealization(G=G, g_J=g_J, West=West, G_Jk=G_Jk)


def true_channels(real: ChannelRealization, ls: LargeScale) -> np.ndarray:
    """Full uplink channels h_k = sqrt(theta_k) g_k, shape (K, M)."""
    return np.sqrt(ls.theta)[:, None] * real.G


def estimate_channels(
    real: ChannelRealization,
    ls: LargeScale,
    attack: AttackVector,
    config: SystemConfig,
) -> EstimatedChannels:
    """Pilot-phase estimation under contamination, plus MRT precoders.

    Estimate per user:  h_hat_k = h_k + sqrt(alpha_k u_k theta_J) g_J + w_k,
    precoder: v_k = conj(h_hat_k) / ||h_hat_k||.
    """
    h = true_channels(real, ls)
    scale = np.sqrt(attack.alpha * config.u * ls.theta_J)
    h_hat = h + scale[:, None] * real.g_J[None, :] + real.West
    norms = np.linalg.norm(h_hat, axis=1)
    if np.any(norms == 0):
        raise DegenerateEstimateError("zero-norm channel estimate")
    v = np.conj(h_hat) / norms[:, None]
    return EstimatedChannels(h_hat=h_hat, v=v)
