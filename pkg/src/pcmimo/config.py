"""System-level constants shared by every module.

All powers are linear and noise-normalized (unit-variance AWGN), so SINR
denominators carry a literal "+1" noise term.  dBm-to-linear conversion is
a harness concern; core modules never see dBm.
"""

from dataclasses import dataclass, field
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class SystemConfig:
    """Scalar constants of the single-cell downlink.

    Attributes:
        M: BS antenna count.
        K: number of single-antenna users.
        L: pilot length in symbols.
        gamma: path-loss exponent.
        A: path-loss constant (same antennas assumed everywhere).
        P_A: BS sum-power budget (linear, noise-normalized).
        P_pilot: per-user pilot power, shape (K,).
        P_J: attacker average power.
        D_min, D_max: user annulus radii in meters.
        D_maxJ: attacker annulus outer radius in meters.
        bandwidth_hz: channel bandwidth, used only for Mbps reporting.
        t_p, t_d: pilot/data phase durations (same arbitrary time unit).
    """

    M: int
    K: int
    L: int
    gamma: float
    A: float
    P_A: float
    P_pilot: np.ndarray
    P_J: float
    D_min: float = 10.0
    D_max: float = 750.0
    D_maxJ: float = 250.0
    bandwidth_hz: float = 20e6
    t_p: float = 1.0
    t_d: float = 1.0

    def __post_init__(self):
        pilot = np.atleast_1d(np.asarray(self.P_pilot, dtype=float))
        if pilot.size == 1:
            pilot = np.full(self.K, float(pilot[0]))
        if pilot.shape != (self.K,):
            raise ValueError(f"P_pilot must have shape ({self.K},), got {pilot.shape}")
        pilot = pilot.copy()
        pilot.flags.writeable = False
        object.__setattr__(self, "P_pilot", pilot)

        if self.M < 1 or self.K < 1 or self.L < 1:
            raise ValueError("M, K and L must all be >= 1")
        if self.P_A <= 0 or np.any(pilot <= 0) or self.P_J < 0:
            raise ValueError("powers must be positive (P_J may be zero)")
        if not (0 < self.D_min < self.D_max):
            raise ValueError("need 0 < D_min < D_max")
        if not (self.D_min <= self.D_maxJ):
            raise ValueError("need D_maxJ >= D_min")
        if self.A <= 0 or self.gamma <= 0:
            raise ValueError("A and gamma must be positive")
        # t_d == 0 is the degenerate no-data-phase corner used by the hybrid
        # module; everywhere else both phases are positive.
        if self.t_p <= 0 or self.t_d < 0:
            raise ValueError("need t_p > 0 and t_d >= 0")

    @property
    def u(self) -> np.ndarray:
        """Attacker-to-pilot power ratios, one per user."""
        return self.P_J / self.P_pilot

    @property
    def duty_cycle(self) -> float:
        """Fraction of the frame carrying data."""
        return self.t_d / (self.t_p + self.t_d)

    @property
    def est_noise_var(self) -> np.ndarray:
        """Per-entry variance of the channel-estimation noise, one per user."""
        return 1.0 / (self.P_pilot * self.L)

    def with_updates(self, **changes) -> "SystemConfig":
        """Return a copy with the given fields replaced."""
        fields = {name: getattr(self, name) for name in self.__dataclass_fields__}
        fields.update(changes)
        return SystemConfig(**fields)
