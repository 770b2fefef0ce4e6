"""Scenario orchestration: the adaptive-versus-fixed comparison.

A scenario renders its noise sources, composes the reference, resolves
secondary-path estimates (offline identification or the true paths),
pre-trains the fixed control filter on its designated training source,
and then runs three arms over the identical disturbance realization:
uncontrolled, adaptive from zero weights, and the frozen pre-trained
filter. Every arm gets a freshly built plant from the same seed, so the
disturbance and measurement noise realizations match across arms.

Step sizes: `auto` resolves to `mu_scale` times the stability limit of
the update actually applied (which carries a factor 2 in front of mu),
i.e. mu = mu_scale / (N * P_xf) with P_xf the filtered-reference power.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._version import __version__
from .acoustics import Plant, synthetic_plant
from .adaptation import FxlmsFilter
from .config import ExperimentConfig, config_hash
from .errors import ConfigError
from .filters import FirFilter
from .loops import (
    run_adaptive,
    run_fixed,
    run_multichannel,
    run_uncontrolled_signal,
)
from .mcanc import ChannelConfig, McAncController
from .metrics import build_run_report
from .signals import Signal
from .synth import compose, synthesize_noise
from .sysid import identify_all_paths


def build_plant(cfg: ExperimentConfig) -> Plant:
    """Fresh plant from the config; identical calls give identical plants."""
    p = cfg.plant
    if p.kind == "synthetic":
        return synthetic_plant(
            n_sources=p.n_sources, n_mics=p.n_mics, seed=p.seed,
            primary=p.primary.to_spec(), secondary=p.secondary.to_spec(),
            perturbation=p.perturbation,
            measurement_noise_std=p.measurement_noise_std)
    if p.kind == "explicit":
        if not p.primary_taps or not p.secondary_taps:
            raise ConfigError("explicit plant needs primary_taps and secondary_taps")
        primaries = [FirFilter(p.primary_taps) for _ in range(p.n_mics)]
        if len(p.secondary_taps) != p.n_sources:
            raise ConfigError(f"secondary_taps must list {p.n_sources} rows")
        secondaries = []
        for row in p.secondary_taps:
            if len(row) != p.n_mics:
                raise ConfigError(f"each secondary_taps row must list {p.n_mics} paths")
            secondaries.append([FirFilter(taps) for taps in row])
        return Plant(primaries, secondaries,
                     measurement_noise_std=p.measurement_noise_std, seed=p.seed)
    raise ConfigError(f"unknown plant kind {p.kind!r}")


def _source_seeds(cfg: ExperimentConfig):
    children = np.random.SeedSequence(cfg.seed).spawn(len(cfg.noise_sources) + 1)
    return children[:-1], children[-1]  # per-source seeds, training seed


def build_reference(cfg: ExperimentConfig) -> Signal:
    """Render every source and compose the run's reference signal."""
    seeds, _ = _source_seeds(cfg)
    comp = cfg.composition
    if comp.mode == "concatenate":
        boundaries = [0.0] + list(comp.switch_times_s) + [cfg.duration_s]
        sources = []
        for i, src in enumerate(cfg.noise_sources):
            seg = boundaries[i + 1] - boundaries[i]
            sources.append(synthesize_noise(src.to_spec(), seeds[i], seg,
                                            cfg.sample_rate_hz))
        return compose(sources, "concatenate", switch_times_s=comp.switch_times_s)
    sources = [synthesize_noise(src.to_spec(), seeds[i], cfg.duration_s,
                                cfg.sample_rate_hz)
               for i, src in enumerate(cfg.noise_sources)]
    return compose(sources, "mix", gains=comp.gains or None)


def build_training_signal(cfg: ExperimentConfig) -> Signal:
    """Fresh realization of the training source, long enough for the
    pre-training plateau rule."""
    _, train_seed = _source_seeds(cfg)
    spec = cfg.noise_sources[cfg.fixed_filter.train_source].to_spec()
    return synthesize_noise(spec, train_seed, cfg.fixed_filter.max_train_s,
                            cfg.sample_rate_hz)


@dataclass
class SysidSummary:
    j: int
    k: int
    misalignment_db: float | None
    residual_power: float
    undermodeled: bool


def resolve_estimates(cfg: ExperimentConfig):
    """Secondary-path estimates as a (J, K, taps) array plus summaries.

    `identify` runs offline white-noise identification against fresh
    plants; `exact` copies the true paths. Either way the estimates are
    then shifted by the loop's one-sample latency before installation.
    """
    p = cfg.plant
    if cfg.sysid.mode == "exact":
        plant = build_plant(cfg)
        taps = max(plant.true_secondary(j, k).size
                   for j in range(p.n_sources) for k in range(p.n_mics))
        est = np.zeros((p.n_sources, p.n_mics, taps))
        for j in range(p.n_sources):
            for k in range(p.n_mics):
                true = plant.true_secondary(j, k)
                est[j, k, :true.size] = true
        summaries = [SysidSummary(j, k, None, 0.0, False)
                     for j in range(p.n_sources) for k in range(p.n_mics)]
        return est, summaries
    results = identify_all_paths(
        lambda: build_plant(cfg), p.n_sources, p.n_mics, cfg.sysid.taps,
        mu=cfg.sysid.mu, n_samples=cfg.sysid.n_samples, seed=cfg.sysid.seed,
        sample_rate_hz=cfg.sample_rate_hz)
    est = np.stack([np.stack([results[j][k].estimate.weights
                              for k in range(p.n_mics)])
                    for j in range(p.n_sources)])
    summaries = [SysidSummary(j, k, results[j][k].misalignment_db,
                              results[j][k].residual_power,
                              results[j][k].undermodeled)
                 for j in range(p.n_sources) for k in range(p.n_mics)]
    return est, summaries


def _aligned_estimates(est: np.ndarray) -> np.ndarray:
    J, K, M = est.shape
    out = np.zeros((J, K, M + 1))
    out[:, :, 1:] = est
    return out


def resolve_mu(cfg: ExperimentConfig, reference: Signal, aligned_est: np.ndarray) -> float:
    """Config mu, or mu_scale / (N * P_xf) when set to auto."""
    ctl = cfg.controller
    if ctl.mu != "auto":
        return float(ctl.mu)
    p_xf = 0.0
    J, K = aligned_est.shape[:2]
    for j in range(J):
        for k in range(K):
            xf = FirFilter(aligned_est[j, k]).process(reference.samples)
            p_xf = max(p_xf, float(np.mean(xf**2)))
    if p_xf == 0.0:
        raise ConfigError("cannot auto-scale mu: filtered reference has zero power")
    if ctl.kind == "multichannel":
        # conservative stacked-correlation bound mu < 2 / (I*J*K*L*P_xf);
        # at 1x1x1 this is exactly twice the single-channel rule below,
        # matching the bare-mu update convention
        channels = ctl.n_refs * cfg.plant.n_sources * cfg.plant.n_mics
        return ctl.mu_scale * 2.0 / (channels * ctl.taps * p_xf)
    return ctl.mu_scale / (ctl.taps * p_xf)


@dataclass
class PretrainInfo:
    seconds_trained: int
    nr_per_second_db: list
    plateau_reached: bool
    mu: float
    diverged_at: int | None = None


def pretrain_fixed_filter(cfg: ExperimentConfig, aligned_est: np.ndarray,
                          mu: float, training: Signal):
    """Adapt on the training source until the per-second noise reduction
    stops improving, then freeze.

    Improvement below `min_improvement_db` between consecutive seconds
    ends training; the training signal's length caps it regardless.
    Returns (frozen weights, PretrainInfo); weights have controller shape
    (taps,) for single, (1, J, taps) for multichannel.
    """
    block = int(round(cfg.sample_rate_hz))
    n_blocks = len(training) // block
    if n_blocks < 1:
        raise ConfigError("training signal shorter than one second")
    d_plant = build_plant(cfg)
    d_all = d_plant.run_uncontrolled(training.samples[:n_blocks * block])
    c_plant = build_plant(cfg)
    ctl_cfg = cfg.controller
    single = ctl_cfg.kind == "single"
    if single:
        controller = FxlmsFilter(ctl_cfg.taps, mu, aligned_est[0, 0])
    else:
        controller = McAncController(
            ChannelConfig(1, cfg.plant.n_sources, cfg.plant.n_mics,
                          ctl_cfg.taps, aligned_est.shape[2]),
            mu, aligned_est)
    nr_history: list[float] = []
    plateau = False
    diverged_at = None
    for b in range(n_blocks):
        seg = training.samples[b * block:(b + 1) * block]
        if single:
            res = run_adaptive(c_plant, controller, seg)
        else:
            res = run_multichannel(c_plant, controller, seg)
        if res.diverged_at is not None:
            diverged_at = b * block + res.diverged_at
            break
        e_power = float(np.sum(res.error**2))
        d_seg = d_all[b * block:(b + 1) * block]
        d_power = float(np.sum(d_seg**2))
        nr = 10.0 * np.log10(d_power / e_power) if e_power > 0 else np.inf
        nr_history.append(nr)
        if b >= 1 and nr - nr_history[-2] < cfg.fixed_filter.min_improvement_db:
            plateau = True
            break
    if diverged_at is not None:
        # weights past the guard are useless; freeze a silent filter and
        # carry the diagnostic so the run reports the divergence
        weights = np.zeros_like(controller.weights)
    else:
        weights = controller.weights
    info = PretrainInfo(seconds_trained=len(nr_history),
                        nr_per_second_db=nr_history,
                        plateau_reached=plateau, mu=mu, diverged_at=diverged_at)
    return weights, info


@dataclass
class ArmResult:
    name: str
    reports: list          # one RunReport per error microphone
    error: np.ndarray      # (T,) or (T, K)
    output: np.ndarray | None
    diverged_at: int | None = None
    diverged_coords: tuple | None = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None


@dataclass
class ScenarioResult:
    config: ExperimentConfig
    reference: Signal
    arms: dict                      # name -> ArmResult
    adaptive_weights: np.ndarray
    fixed_weights: np.ndarray
    installed_estimates: np.ndarray  # loop-aligned (J, K, M+1)
    sysid_summaries: list
    pretrain: PretrainInfo
    mu: float
    mse_trace: np.ndarray           # decimated adaptive-arm squared cost
    mse_stride: int
    weight_snapshots: np.ndarray | None
    snapshot_steps: np.ndarray | None
    provenance: dict = field(default_factory=dict)

    @property
    def any_diverged(self) -> bool:
        if self.pretrain.diverged_at is not None:
            return True
        return any(arm.diverged for arm in self.arms.values())


def _reports_for(d: np.ndarray, e: np.ndarray, cfg: ExperimentConfig) -> list:
    m = cfg.metrics
    rate = cfg.sample_rate_hz
    if e.ndim == 1:
        d2, e2 = d[:, None], e[:, None]
    else:
        d2, e2 = d, e
    reports = []
    for k in range(e2.shape[1]):
        n = e2.shape[0]
        reports.append(build_run_report(
            Signal(d2[:n, k], rate), Signal(e2[:, k], rate),
            interval_s=m.interval_s, segment_len=m.segment_len,
            overlap=m.overlap, hop=m.hop))
    return reports


def run_scenario(cfg: ExperimentConfig, parallel_arms: bool = False) -> ScenarioResult:
    """Execute sysid, pre-training, and the three comparison arms.

    Each arm owns a freshly built plant and controller, so with
    `parallel_arms` the loops may execute concurrently; results are
    identical to the sequential order either way.
    """
    cfg.validate()
    reference = build_reference(cfg)
    raw_est, sysid_summaries = resolve_estimates(cfg)
    aligned = _aligned_estimates(raw_est)
    mu = resolve_mu(cfg, reference, aligned)
    training = build_training_signal(cfg)
    fixed_weights, pretrain = pretrain_fixed_filter(cfg, aligned, mu, training)

    single = cfg.controller.kind == "single"
    rate = cfg.sample_rate_hz
    stride = max(cfg.export.error_decimation, 1)
    snapshot_stride = int(round(rate))  # one weight snapshot per second
    chan = ChannelConfig(1, cfg.plant.n_sources, cfg.plant.n_mics,
                         cfg.controller.taps, aligned.shape[2])

    def arm_uncontrolled():
        return run_uncontrolled_signal(build_plant(cfg), reference.samples)

    def arm_adaptive():
        if single:
            controller = FxlmsFilter(cfg.controller.taps, mu, aligned[0, 0])
            return run_adaptive(build_plant(cfg), controller, reference.samples,
                                weight_stride=snapshot_stride)
        controller = McAncController(chan, mu, aligned)
        return run_multichannel(build_plant(cfg), controller, reference.samples)

    def arm_fixed():
        if single:
            return run_fixed(build_plant(cfg), FirFilter(fixed_weights),
                             reference.samples)
        frozen = McAncController(chan, 0.0, aligned)
        frozen.weights = fixed_weights
        return run_multichannel(build_plant(cfg), frozen, reference.samples)

    if parallel_arms:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=3) as pool:
            futures = [pool.submit(f) for f in (arm_uncontrolled, arm_adaptive,
                                                arm_fixed)]
            d, res, fixed_res = (f.result() for f in futures)
    else:
        d, res, fixed_res = arm_uncontrolled(), arm_adaptive(), arm_fixed()

    uncontrolled = ArmResult(
        name="uncontrolled",
        reports=_reports_for(d, d, cfg),
        error=d, output=None)
    if single:
        adaptive = ArmResult(
            name="adaptive",
            reports=_reports_for(d, res.error, cfg),
            error=res.error, output=res.output, diverged_at=res.diverged_at)
        mse_trace = res.error[::stride] ** 2
        weight_snaps, snap_steps = res.weight_snapshots, res.snapshot_steps
    else:
        adaptive = ArmResult(
            name="adaptive",
            reports=_reports_for(d, res.error, cfg),
            error=res.error, output=res.output,
            diverged_at=res.diverged_at, diverged_coords=res.diverged_coords)
        mse_trace = res.cost[::stride].copy()
        weight_snaps, snap_steps = None, None
    adaptive_weights = res.final_weights
    fixed = ArmResult(
        name="fixed",
        reports=_reports_for(d, fixed_res.error, cfg),
        error=fixed_res.error, output=fixed_res.output)

    provenance = {
        "config_hash": config_hash(cfg),
        "seed": cfg.seed,
        "version": __version__,
        "mu": mu,
    }
    return ScenarioResult(
        config=cfg, reference=reference,
        arms={"uncontrolled": uncontrolled, "adaptive": adaptive, "fixed": fixed},
        adaptive_weights=adaptive_weights, fixed_weights=fixed_weights,
        installed_estimates=aligned, sysid_summaries=sysid_summaries,
        pretrain=pretrain, mu=mu,
        mse_trace=mse_trace, mse_stride=stride,
        weight_snapshots=weight_snaps, snapshot_steps=snap_steps,
        provenance=provenance)
