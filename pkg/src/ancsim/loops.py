"""Closed-loop execution of controllers against a simulated plant.

Per-sample ordering, identical for every controller kind: read x(n),
obtain e(n) from the plant, compute u(n), adapt, and only then does u(n)
reach the plant, affecting e(n+1) onward. The loop therefore inserts one
sample of latency between controller output and microphone response, so
the path a controller actually drives is the true secondary path behind
one extra delay. `loop_aligned_path` applies that shift to an estimate
before it is installed in a controller.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .acoustics import Plant
from .adaptation import FxlmsFilter
from .errors import DataError, DivergenceError
from .filters import FirFilter
from .mcanc import McAncController
from .signals import as_samples


def loop_aligned_path(taps) -> np.ndarray:
    """Prepend the loop's one-sample latency to a path impulse response."""
    taps = np.atleast_1d(np.asarray(taps, dtype=np.float64))
    return np.concatenate([[0.0], taps])


def run_uncontrolled_signal(plant: Plant, x) -> np.ndarray:
    """Uncontrolled disturbance; 1-D for a single microphone, else (T, K)."""
    d = plant.run_uncontrolled(x)
    return d[:, 0] if d.shape[1] == 1 else d


@dataclass
class LoopResult:
    """Artifacts of one control-loop run (single error mic)."""

    error: np.ndarray
    output: np.ndarray
    weight_snapshots: np.ndarray | None = None
    snapshot_steps: np.ndarray | None = None
    final_weights: np.ndarray | None = None
    xf_norm_sq: np.ndarray | None = None
    diverged_at: int | None = None


@dataclass
class McLoopResult:
    """Artifacts of one multichannel run: errors (T, K), outputs (T, J),
    per-sample cost sum_k e_k^2."""

    error: np.ndarray
    output: np.ndarray
    cost: np.ndarray
    final_weights: np.ndarray | None = None
    diverged_at: int | None = None
    diverged_coords: tuple | None = None


def run_adaptive(plant: Plant, controller: FxlmsFilter, x,
                 weight_stride: int = 0, record_xf_norm: bool = False) -> LoopResult:
    """Adaptive FxLMS run over a reference signal (plant must be 1x1).

    Divergence truncates the run at the failing step instead of
    propagating, so partial traces remain available for diagnostics.
    """
    if plant.n_sources != 1 or plant.n_mics != 1:
        raise DataError("single-channel loop needs a 1x1 plant")
    xs = as_samples(x)
    err = np.empty(xs.size)
    out = np.empty(xs.size)
    xf_norm = np.empty(xs.size) if record_xf_norm else None
    snaps, snap_steps = [], []
    diverged_at = None
    u_prev = np.zeros(1)
    for n in range(xs.size):
        e = plant.step(xs[n], u_prev)
        err[n] = e[0]
        try:
            u = controller.step(xs[n], e[0])
        except DivergenceError as exc:
            diverged_at = n
            err, out = err[:n + 1], out[:n]
            if xf_norm is not None:
                xf_norm = xf_norm[:n]
            break
        out[n] = u
        u_prev[0] = u
        if xf_norm is not None:
            xf_norm[n] = controller.filtered_reference_power()
        if weight_stride and (n + 1) % weight_stride == 0:
            snaps.append(controller.weights)
            snap_steps.append(n)
    return LoopResult(
        error=err, output=out,
        weight_snapshots=np.array(snaps) if snaps else None,
        snapshot_steps=np.array(snap_steps, dtype=int) if snaps else None,
        final_weights=controller.weights,
        xf_norm_sq=xf_norm,
        diverged_at=diverged_at,
    )


def run_fixed(plant: Plant, control_filter: FirFilter, x) -> LoopResult:
    """Run a frozen FIR controller through the same loop ordering."""
    if plant.n_sources != 1 or plant.n_mics != 1:
        raise DataError("single-channel loop needs a 1x1 plant")
    xs = as_samples(x)
    err = np.empty(xs.size)
    out = np.empty(xs.size)
    u_prev = np.zeros(1)
    for n in range(xs.size):
        e = plant.step(xs[n], u_prev)
        err[n] = e[0]
        u = control_filter.process_sample(xs[n])
        out[n] = u
        u_prev[0] = u
    return LoopResult(error=err, output=out, final_weights=control_filter.weights)


def run_multichannel(plant: Plant, controller: McAncController, x_refs) -> McLoopResult:
    """Adaptive multichannel run. `x_refs` is (T,) for one reference sensor
    or (T, I); plant geometry must match the controller's J and K."""
    xr = np.asarray(x_refs, dtype=np.float64)
    if xr.ndim == 1:
        xr = xr[:, None]
    if xr.shape[1] != controller.n_refs:
        raise DataError(
            f"reference stream has {xr.shape[1]} channels, controller expects "
            f"{controller.n_refs}")
    if plant.n_sources != controller.n_sources or plant.n_mics != controller.n_mics:
        raise DataError("plant geometry does not match controller")
    if xr.shape[1] != 1:
        raise DataError("plant accepts a single reference input; use I=1 here")
    T = xr.shape[0]
    err = np.empty((T, plant.n_mics))
    out = np.empty((T, plant.n_sources))
    cost = np.empty(T)
    diverged_at = None
    diverged_coords = None
    u_prev = np.zeros(plant.n_sources)
    for n in range(T):
        e = plant.step(xr[n, 0], u_prev)
        err[n] = e
        try:
            u = controller.step(xr[n], e)
        except DivergenceError as exc:
            diverged_at = n
            diverged_coords = exc.coords
            err, out, cost = err[:n + 1], out[:n], cost[:n]
            break
        out[n] = u
        u_prev = u
        cost[n] = controller.last_cost
    return McLoopResult(
        error=err, output=out, cost=cost,
        final_weights=controller.weights,
        diverged_at=diverged_at, diverged_coords=diverged_coords,
    )
