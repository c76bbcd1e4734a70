"""Seeded experiment runner reproducing the Fig. 4 experiment family.

Holds the only dBm-to-linear conversion in the package, the desk/paper
configuration presets, the scenario catalog, and the CSV/CDF writers.
Every run is fully determined by (spec, seed): realization r of sweep
point s always draws from the stream keyed (seed, s, r).
"""

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .channel import (
    AttackVector,
    LargeScale,
    estimate_channels,
    sample_channel,
    sample_topology,
)
from .config import SystemConfig
from .rates import (
    PowerAllocation,
    asymptotic_rates,
    exact_rates,
    secrecy_report,
)
from . import attack_optim, hybrid, secrecy_optim

NOISE_FLOOR_DBM = -101.0

# dBm presets from the experimental setup; desk scale trims the BS budget so
# inter-user interference stays within the large-M approximation's validity.
PAPER_POWERS_DBM = {"alice": 46.0, "pilot": 20.0, "attacker": 30.0}
DESK_ALICE_DBM = 34.0

RATE_METRICS = {
    "sum_rate", "sum_rate_asym", "max_secrecy", "max_rate", "threshold", "evpi",
}


def dbm_to_linear(p_dbm: float, noise_floor_dbm: float = NOISE_FLOOR_DBM) -> float:
    """Convert dBm to the linear noise-normalized scale used by the core."""
    return 10.0 ** ((p_dbm - noise_floor_dbm) / 10.0)


def linear_to_dbm(p: float, noise_floor_dbm: float = NOISE_FLOOR_DBM) -> float:
    return 10.0 * np.log10(p) + noise_floor_dbm


def _build_system(
    M: int,
    alice_dbm: float,
    K: int = 10,
    L: int = 10,
    pilot_dbm: float = PAPER_POWERS_DBM["pilot"],
    attacker_dbm: float = PAPER_POWERS_DBM["attacker"],
    noise_floor_dbm: float = NOISE_FLOOR_DBM,
    **overrides,
) -> SystemConfig:
    kwargs = dict(
        M=M,
        K=K,
        L=L,
        gamma=3.522,
        A=3.0682e-5,
        P_A=dbm_to_linear(alice_dbm, noise_floor_dbm),
        P_pilot=np.full(K, dbm_to_linear(pilot_dbm, noise_floor_dbm)),
        P_J=dbm_to_linear(attacker_dbm, noise_floor_dbm),
    )
    kwargs.update(overrides)
    return SystemConfig(**kwargs)


def paper_system(**overrides) -> SystemConfig:
    """Full-size setup: 1000 antennas, 46/20/30 dBm over a -101 dBm floor."""
    overrides.setdefault("M", 1000)
    overrides.setdefault("alice_dbm", PAPER_POWERS_DBM["alice"])
    return _build_system(**overrides)


def desk_system(**overrides) -> SystemConfig:
    """Desk-size setup: 256 antennas and a reduced BS budget."""
    overrides.setdefault("M", 256)
    overrides.setdefault("alice_dbm", DESK_ALICE_DBM)
    return _build_system(**overrides)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator derived from the run seed and an index key."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


@dataclass(frozen=True)
class ResultRow:
    sweep: float
    scheme: str
    metric: str
    mean: float
    stderr: float
    n: int

    def __post_init__(self):
        if self.stderr < 0 or self.n <= 0:
            raise ValueError("stderr must be >= 0 and n > 0")


@dataclass(frozen=True)
class ExperimentSpec:
    """A reproducible experiment: scenario, sweep, realization count, seed."""

    scenario: str
    sweep: Optional[tuple] = None
    realizations: Optional[int] = None
    seed: int = 0
    unit: str = "se"            # "se" (bit/s/Hz) or "mbps"
    out: Optional[str] = None
    scale: str = "desk"         # "desk" or "paper"
    t_scenarios: int = 200      # sample-average scenario count (hybrid)
    system_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(
                f"unknown scenario {self.scenario!r}; known: {sorted(SCENARIOS)}"
            )
        if self.unit not in ("se", "mbps"):
            raise ValueError("unit must be 'se' or 'mbps'")
        if self.scale not in ("desk", "paper"):
            raise ValueError("scale must be 'desk' or 'paper'")
        if self.realizations is not None and self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.sweep is not None and len(self.sweep) == 0:
            raise ValueError("sweep must be nonempty")


def build_config(spec: ExperimentSpec) -> SystemConfig:
    builder = paper_system if spec.scale == "paper" else desk_system
    return builder(**spec.system_overrides)


def _mean_rows(
    sweep_value: float, samples: dict[tuple[str, str], list], rows: list
) -> None:
    for (scheme, metric), values in samples.items():
        arr = np.asarray(values, dtype=float)
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
        rows.append(ResultRow(float(sweep_value), scheme, metric,
                              float(arr.mean()), stderr, arr.size))


def _run_fig4a(spec: ExperimentSpec, config: SystemConfig, n: int, sweep) -> tuple:
    """Exact vs asymptotic sum-rate over the antenna count."""
    rows: list[ResultRow] = []
    for si, m in enumerate(sweep):
        cfg = config.with_updates(M=int(m))
        pa = PowerAllocation.uniform(cfg)
        uniform = AttackVector.uniform(cfg.K)
        none = AttackVector.zeros(cfg.K)
        samples: dict[tuple[str, str], list] = {}
        for r in range(n):
            rng = stream(spec.seed, si, r)
            top = sample_topology(rng, cfg)
            ls = LargeScale.from_topology(top, cfg)
            real = sample_channel(rng, cfg)
            for scheme, attack in (("noPC", none), ("PC-unc", uniform)):
                est = estimate_channels(real, ls, attack, cfg)
                samples.setdefault((scheme, "sum_rate"), []).append(
                    exact_rates(real, ls, est, pa).sum_rate
                )
                samples.setdefault((scheme, "sum_rate_asym"), []).append(
                    asymptotic_rates(ls, attack, pa, cfg).sum_rate
                )
        _mean_rows(m, samples, rows)
    return rows, {}


def _pc_sweep_common(spec, config, n, sweep, metric: str):
    """Shared runner for the attacker-distance and pilot-length sweeps."""
    rows: list[ResultRow] = []
    for si, v in enumerate(sweep):
        if metric == "sum_rate_L":
            cfg = config.with_updates(L=int(v), D_maxJ=250.0)
            out_metric = "sum_rate"
        else:
            cfg = config.with_updates(D_maxJ=float(v))
            out_metric = metric
        pa = PowerAllocation.uniform(cfg)
        alpha_unc = attack_optim.solve_p2(cfg, pa)
        none = AttackVector.zeros(cfg.K)
        samples: dict[tuple[str, str], list] = {}
        evpi_diffs = []
        for r in range(n):
            rng = stream(spec.seed, si, r)
            top = sample_topology(rng, cfg)
            ls = LargeScale.from_topology(top, cfg)
            coef = attack_optim.P1Coefficients.from_topology(top, pa, cfg)
            alpha_pi = attack_optim.solve_p1_closed_form(coef)
            j = int(rng.integers(cfg.K))
            reports = {
                "noPC": asymptotic_rates(ls, none, pa, cfg),
                "singleUserPC": asymptotic_rates(ls, AttackVector.single_user(cfg.K, j), pa, cfg),
                "PC-unc": asymptotic_rates(ls, alpha_unc, pa, cfg),
                "PC-pi": asymptotic_rates(ls, alpha_pi, pa, cfg),
            }
            state = attack_optim.solve_p3_gauss_seidel(cfg, top)
            reports["optimalPC-pi"] = asymptotic_rates(ls, state.alpha, state.pd, cfg)
            for scheme, rep in reports.items():
                value = rep.sum_rate if out_metric == "sum_rate" else rep.fairness
                samples.setdefault((scheme, out_metric), []).append(value)
            evpi_diffs.append(reports["PC-unc"].sum_rate - reports["PC-pi"].sum_rate)
        if out_metric == "sum_rate":
            samples[("PC-unc", "evpi")] = evpi_diffs
        _mean_rows(v, samples, rows)
    return rows, {}


def _run_fig4b(spec, config, n, sweep):
    return _pc_sweep_common(spec, config, n, sweep, "sum_rate")


def _run_fig4c(spec, config, n, sweep):
    return _pc_sweep_common(spec, config, n, sweep, "fairness")


def _run_fig4d(spec, config, n, sweep):
    return _pc_sweep_common(spec, config, n, sweep, "sum_rate_L")


def _run_fig4e(spec, config, n, sweep):
    """Hybrid vs pilot-only vs data-jamming-only over attacker antenna count."""
    rows: list[ResultRow] = []
    for si, n_ant in enumerate(sweep):
        n_ant = int(n_ant)
        pa = PowerAllocation.uniform(config)
        samples: dict[tuple[str, str], list] = {}
        for r in range(n):
            rng = stream(spec.seed, si, r)
            top = sample_topology(rng, config)
            scen = hybrid.build_scenarios(rng, n_ant, config.K, spec.t_scenarios)
            pol_h = hybrid.solve_p6_saa(config, top, pa, scen, tol=1e-5)
            pol_pc = hybrid.pc_only_policy(config, top, pa, scen)
            pol_jam = hybrid.jamming_only_policy(config, top, pa, scen, tol=1e-5)
            samples.setdefault(("hybrid", "sum_rate"), []).append(pol_h.value)
            samples.setdefault(("PC-pi", "sum_rate"), []).append(pol_pc.value)
            samples.setdefault(("dataJam", "sum_rate"), []).append(pol_jam.value)
        _mean_rows(n_ant, samples, rows)
    return rows, {}


def _run_fig4f(spec, config, n, sweep):
    """Maximum individual secrecy rate over the attacker-distance sweep."""
    rows: list[ResultRow] = []
    for si, v in enumerate(sweep):
        cfg = config.with_updates(D_maxJ=float(v))
        pa = PowerAllocation.uniform(cfg)
        none = AttackVector.zeros(cfg.K)
        samples: dict[tuple[str, str], list] = {}
        for r in range(n):
            rng = stream(spec.seed, si, r)
            top = sample_topology(rng, cfg)
            ls = LargeScale.from_topology(top, cfg)
            base = asymptotic_rates(ls, none, pa, cfg)
            samples.setdefault(("noPC", "max_secrecy"), []).append(float(base.R.max()))
            samples.setdefault(("noPC", "max_rate"), []).append(float(base.R.max()))
            coef = secrecy_optim.SecrecyCoefficients.from_topology(top, pa, cfg)
            alpha5, _ = secrecy_optim.solve_p5_greedy(coef)
            rep = secrecy_report(ls, alpha5, pa, cfg)
            samples.setdefault(("PC-Sec-P5", "max_secrecy"), []).append(rep.max_secrecy)
            samples.setdefault(("PC-Sec-P5", "max_rate"), []).append(float(rep.R.max()))
            if cfg.K <= 4:
                alpha4, nu4 = secrecy_optim.solve_p4_bruteforce(coef)
                rep4 = secrecy_report(ls, alpha4, pa, cfg)
                samples.setdefault(("PC-Sec-P4", "max_secrecy"), []).append(nu4)
                samples.setdefault(("PC-Sec-P4", "max_rate"), []).append(float(rep4.R.max()))
        _mean_rows(v, samples, rows)
    return rows, {}


def _cdf_scenario(spec, config, n, per_user_values) -> tuple:
    """Common CDF machinery: collect per-user samples per scheme."""
    pa = PowerAllocation.uniform(config)
    collections: dict[str, list] = {}
    for r in range(n):
        rng = stream(spec.seed, 0, r)
        top = sample_topology(rng, config)
        ls = LargeScale.from_topology(top, config)
        for scheme, values in per_user_values(config, pa, top, ls):
            collections.setdefault(scheme, []).extend(float(x) for x in values)
    rows = []
    cdfs = {}
    for scheme, values in collections.items():
        arr = np.asarray(values)
        stderr = float(arr.std(ddof=1) / np.sqrt(arr.size))
        rows.append(ResultRow(0.0, scheme, "cdf_point", float(arr.mean()), stderr, arr.size))
        cdfs[scheme] = arr
    return rows, cdfs


def _run_fig4g(spec, config, n, sweep):
    def per_user(cfg, pa, top, ls):
        none = AttackVector.zeros(cfg.K)
        coef = attack_optim.P1Coefficients.from_topology(top, pa, cfg)
        alpha_pi = attack_optim.solve_p1_closed_form(coef)
        yield "noPC", asymptotic_rates(ls, none, pa, cfg).R
        yield "PC-pi", asymptotic_rates(ls, alpha_pi, pa, cfg).R

    return _cdf_scenario(spec, config, n, per_user)


def _run_fig4h(spec, config, n, sweep):
    def per_user(cfg, pa, top, ls):
        none = AttackVector.zeros(cfg.K)
        yield "noPC", asymptotic_rates(ls, none, pa, cfg).R
        coef = secrecy_optim.SecrecyCoefficients.from_topology(top, pa, cfg)
        alpha5, _ = secrecy_optim.solve_p5_greedy(coef)
        yield "PC-Sec-P5", secrecy_report(ls, alpha5, pa, cfg).Rs

    return _cdf_scenario(spec, config, n, per_user)


def _run_fig4i(spec, config, n, sweep):
    """Chance-constrained secrecy thresholds and their empirical coverage."""
    rows: list[ResultRow] = []
    n_inner = 150
    for si, eps in enumerate(sweep):
        for scheme, k_mult in (("chance", 1), ("chance-2K", 2)):
            cfg = config.with_updates(
                K=config.K * k_mult,
                P_pilot=np.full(config.K * k_mult, float(config.P_pilot[0])),
            )
            pa = PowerAllocation.uniform(cfg)
            samples: dict[tuple[str, str], list] = {}
            for r in range(n):
                rng = stream(spec.seed, si, k_mult, r)
                top = sample_topology(rng, cfg)
                coef = secrecy_optim.SecrecyCoefficients.from_topology(top, pa, cfg)
                alpha, nu_hat = secrecy_optim.solve_p5_chance(coef, float(eps))
                check = secrecy_optim.validate_chance_solution(
                    alpha, nu_hat, top.z_J, pa, cfg, rng, n_topologies=n_inner
                )
                samples.setdefault((scheme, "threshold"), []).append(np.log2(nu_hat))
                samples.setdefault((scheme, "exceedance"), []).append(check.exceedance)
                samples.setdefault((scheme, "zero_secrecy"), []).append(check.zero_secrecy)
                samples.setdefault((scheme, "max_secrecy"), []).append(check.mean_max_secrecy)
            _mean_rows(eps, samples, rows)
    return rows, {}


@dataclass(frozen=True)
class ScenarioDef:
    runner: Callable
    sweep: tuple
    desk_realizations: int
    description: str


SCENARIOS: dict[str, ScenarioDef] = {
    "fig4a": ScenarioDef(_run_fig4a, (64, 128, 256, 512, 1024), 200,
                         "exact vs asymptotic sum-rate over antenna count"),
    "fig4b": ScenarioDef(_run_fig4b, (100, 200, 300, 400, 500, 600, 700), 300,
                         "sum-rate of all PC schemes over attacker radius"),
    "fig4c": ScenarioDef(_run_fig4c, (100, 200, 300, 400, 500, 600, 700), 300,
                         "Jain fairness of all PC schemes over attacker radius"),
    "fig4d": ScenarioDef(_run_fig4d, (10, 20, 40, 80, 160), 300,
                         "sum-rate over pilot length at 250 m attacker radius"),
    "fig4e": ScenarioDef(_run_fig4e, (1, 2, 4), 30,
                         "hybrid vs PC-only vs data-jamming over attacker antennas"),
    "fig4f": ScenarioDef(_run_fig4f, (325, 400, 475, 550, 625, 700), 300,
                         "max individual secrecy rate over attacker radius"),
    "fig4g": ScenarioDef(_run_fig4g, (0,), 400,
                         "empirical CDF of per-user downlink rate"),
    "fig4h": ScenarioDef(_run_fig4h, (0,), 400,
                         "empirical CDF of per-user secrecy rate"),
    "fig4i": ScenarioDef(_run_fig4i, (0.1, 0.2, 0.3, 0.4, 0.5, 0.6), 30,
                         "chance-constrained secrecy threshold and coverage vs epsilon"),
}

PAPER_REALIZATIONS = 100_000


def run_experiment(spec: ExperimentSpec) -> list[ResultRow]:
    """Run one scenario and write its CSV (and CDF files where applicable)."""
    scenario = SCENARIOS[spec.scenario]
    config = build_config(spec)
    sweep = tuple(spec.sweep) if spec.sweep is not None else scenario.sweep
    n = spec.realizations
    if n is None:
        n = scenario.desk_realizations if spec.scale == "desk" else PAPER_REALIZATIONS
    rows, cdfs = scenario.runner(spec, config, n, sweep)

    factor = 1.0
    if spec.unit == "mbps":
        factor = config.bandwidth_hz * config.duty_cycle / 1e6
    converted = [
        replace(row, mean=row.mean * factor, stderr=row.stderr * factor)
        if row.metric in RATE_METRICS or row.metric == "cdf_point"
        else row
        for row in rows
    ]

    out = Path(spec.out) if spec.out else Path(f"{spec.scenario}.csv")
    emit_csv(converted, out)
    for scheme, values in cdfs.items():
        emit_cdf(values * factor, out.with_name(f"{out.stem}_cdf_{scheme}.csv"))
    return converted


def emit_csv(rows: Sequence[ResultRow], path) -> None:
    """Write result rows with the fixed column order."""
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sweep", "scheme", "metric", "mean", "stderr", "n"])
        for row in rows:
            writer.writerow(
                [repr(float(row.sweep)), row.scheme, row.metric,
                 repr(float(row.mean)), repr(float(row.stderr)), row.n]
            )


def emit_cdf(samples: np.ndarray, path) -> None:
    """Write sorted (value, rank/n) pairs of an empirical CDF."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = np.sort(samples)
    n = ordered.size
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["value", "cdf"])
        for i, v in enumerate(ordered):
            writer.writerow([repr(float(v)), repr((i + 1) / n)])


def load_spec_file(path) -> ExperimentSpec:
    """Parse a TOML experiment manifest into an ExperimentSpec."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib

    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    exp = data.get("experiment", {})
    system = data.get("system", {})
    known = {"scenario", "sweep", "realizations", "seed", "unit", "out",
             "scale", "t_scenarios"}
    unknown = set(exp) - known
    if unknown:
        raise ValueError(f"unknown [experiment] keys: {sorted(unknown)}")
    if "sweep" in exp:
        exp["sweep"] = tuple(exp["sweep"])
    return ExperimentSpec(system_overrides=dict(system), **exp)
