"""Time stepping for the shell system in rescaled time.

All directions share one step size.  Besides the amplitudes, each scheme
advances the condensate and the two overflow accumulators with the same
quadrature weights, so the linear invariants (energy including overflow)
are preserved by the discretisation itself.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .collision import GridRates, grid_rates
from .config import ModelConfig
from .diagnostics import DiagnosticsRecord, Reference, make_record
from .state import FullState, ShellGrid, _snorm_from_level_sums, build_initial

log = logging.getLogger(__name__)


class StiffnessError(RuntimeError):
    """Too many rejected steps; carries the state at which stepping gave up."""

    def __init__(self, message: str, time: float, dt: float, min_amplitude: float):
        super().__init__(message)
        self.time = time
        self.dt = dt
        self.min_amplitude = min_amplitude


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class StepControl:
    dt_max: float = 0.1
    cfl_safety: float = 1.0
    positivity_tol: float = 1e-14
    max_rejects: int = 30
    drop_threshold: float = 1e-30

    @classmethod
    def from_config(cls, config: ModelConfig) -> StepControl:
        return cls(config.dt_max, config.cfl_safety, config.positivity_tol,
                   config.max_rejects, config.drop_threshold)


def loss_bound(state: FullState) -> float:
    """``max_dir (4 * positive_mass + 2 * max amplitude)``, a bound on every loss coefficient."""
    if state.amps.size == 0:
        return 0.0
    lam = 4.0 * state.positive_mass() + 2.0 * state.amps.max(axis=1)
    return float(lam.max())


def cfl_dt(state: FullState, ctl: StepControl) -> float:
    lam = loss_bound(state)
    if lam <= 0:
        return ctl.dt_max
    return min(ctl.dt_max, ctl.cfl_safety / lam)


def _rates(state: FullState, amps: np.ndarray) -> GridRates:
    return grid_rates(amps, state.grid, state.config.condensate_channel)


def _advance(state: FullState, amps: np.ndarray, dt: float, cond: np.ndarray,
             ov_mass: np.ndarray, ov_energy: np.ndarray) -> FullState:
    new = state.copy()
    new.amps = amps
    new.condensate += cond
    new.overflow_mass += ov_mass
    new.overflow_energy += ov_energy
    new.time = state.time + dt
    return new


def _tidy(state: FullState, ctl: StepControl) -> None:
    """Clamp tolerated negatives to zero and drop negligible amplitudes, logging both."""
    amps = state.amps
    neg = amps < 0
    if neg.any():
        state.clamped_mass += -np.where(neg, amps, 0.0).sum(axis=1)
        amps[neg] = 0.0
    tiny = (amps > 0) & (amps < ctl.drop_threshold)
    if tiny.any():
        state.dropped_mass += np.where(tiny, amps, 0.0).sum(axis=1)
        amps[tiny] = 0.0


def _rk4_trial(state: FullState, dt: float) -> FullState:
    y = state.amps
    k1 = _rates(state, y)
    d1 = k1.net(y)
    k2 = _rates(state, y + 0.5 * dt * d1)
    d2 = k2.net(y + 0.5 * dt * d1)
    k3 = _rates(state, y + 0.5 * dt * d2)
    d3 = k3.net(y + 0.5 * dt * d2)
    k4 = _rates(state, y + dt * d3)
    d4 = k4.net(y + dt * d3)
    w = dt / 6.0

    def comb(name: str) -> np.ndarray:
        return w * (getattr(k1, name) + 2 * getattr(k2, name)
                    + 2 * getattr(k3, name) + getattr(k4, name))

    amps = y + w * (d1 + 2 * d2 + 2 * d3 + d4)
    discarded = comb("discarded_rate")
    if discarded.any():
        log.debug("t=%g: discarded %g of condensate-bound mass", state.time, discarded.sum())
    return _advance(state, amps, dt, comb("condensate_rate"),
                    comb("overflow_mass_rate"), comb("overflow_energy_rate"))


def step_rk4(state: FullState, ctl: StepControl, dt: float | None = None) -> FullState:
    """One classical Runge-Kutta step, halving ``dt`` until no amplitude falls below ``-tol``."""
    dt = cfl_dt(state, ctl) if dt is None else dt
    for _ in range(ctl.max_rejects + 1):
        new = _rk4_trial(state, dt)
        low = float(new.amps.min(initial=0.0))
        if low >= -ctl.positivity_tol:
            _tidy(new, ctl)
            return new
        log.debug("t=%g: rejecting dt=%g (min amplitude %g)", state.time, dt, low)
        dt *= 0.5
    raise StiffnessError(
        f"step rejected {ctl.max_rejects} times at t={state.time}", state.time, dt, low
    )


def step_patankar(state: FullState, ctl: StepControl, dt: float | None = None) -> FullState:
    """Euler step with losses weighted by ``g_new / g_old``; positive for every ``dt``."""
    dt = cfl_dt(state, ctl) if dt is None else dt
    r = _rates(state, state.amps)
    amps = (state.amps + dt * r.gain) / (1.0 + dt * r.loss_coef)
    new = _advance(state, amps, dt, dt * r.condensate_rate,
                   dt * r.overflow_mass_rate, dt * r.overflow_energy_rate)
    _tidy(new, ctl)
    return new


STEPPERS: dict[str, Callable[..., FullState]] = {"rk4": step_rk4, "patankar": step_patankar}


# Picard iteration of the integral form


@dataclass
class PicardResult:
    times: np.ndarray
    states: list[FullState]
    iterations: int
    residual: float


def trajectory_distance(grid: ShellGrid, a: np.ndarray, b: np.ndarray,
                        ca: np.ndarray, cb: np.ndarray, weight: float) -> float:
    """Sup over nodes of the norm of the difference of two trajectories.

    ``a`` and ``b`` are ``(nodes, n_dir, n+1)`` amplitude stacks; ``ca`` and
    ``cb`` the matching ``(nodes, n_dir)`` condensates.
    """
    sums = np.abs(a - b) @ grid.level_matrix
    return max(
        _snorm_from_level_sums(sums[k], ca[k] - cb[k], weight) for k in range(len(a))
    )


def _cumtrapz(values: np.ndarray, half_dt: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    w = half_dt.reshape((-1,) + (1,) * (values.ndim - 1))
    out[1:] = np.cumsum(w * (values[1:] + values[:-1]), axis=0)
    return out


def picard_solve(initial: FullState, T: float, tol: float = 1e-13, max_iter: int = 200,
                 n_nodes: int | None = None) -> PicardResult:
    """Fixed point of ``h(t) = f_in + int_0^t B(h(s)) ds`` on a uniform time grid.

    The integral is the cumulative trapezoid rule, so the converged trajectory
    agrees with the exact solution to second order in the node spacing.
    """
    nodes = initial.config.picard_nodes if n_nodes is None else n_nodes
    times = np.linspace(0.0, T, nodes)
    half_dt = 0.5 * np.diff(times)
    weight = initial.config.norm_weight
    grid = initial.grid
    f_in = initial.amps
    h = np.broadcast_to(f_in, (nodes,) + f_in.shape).copy()
    cond = np.broadcast_to(initial.condensate, (nodes, initial.n_dir)).copy()
    extra = {}
    residual = math.inf
    for it in range(1, max_iter + 1):
        rates = [_rates(initial, h[k]) for k in range(nodes)]
        field_ = np.stack([r.net(h[k]) for k, r in enumerate(rates)])
        h_new = f_in + _cumtrapz(field_, half_dt)
        cond_new = initial.condensate + _cumtrapz(
            np.stack([r.condensate_rate for r in rates]), half_dt)
        extra = {
            name: _cumtrapz(np.stack([getattr(r, name) for r in rates]), half_dt)
            for name in ("overflow_mass_rate", "overflow_energy_rate")
        }
        residual = trajectory_distance(grid, h_new, h, cond_new, cond, weight)
        h, cond = h_new, cond_new
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"Picard iteration did not contract: residual {residual:g} after {max_iter} sweeps",
            residual, max_iter,
        )
    states = []
    for k, t in enumerate(times):
        st = initial.copy()
        st.amps = h[k].copy()
        st.condensate = cond[k].copy()
        st.overflow_mass = initial.overflow_mass + extra["overflow_mass_rate"][k]
        st.overflow_energy = initial.overflow_energy + extra["overflow_energy_rate"][k]
        st.time = initial.time + float(t)
        states.append(st)
    return PicardResult(times, states, it, residual)


# full runs


@dataclass
class StepMonitor:
    """Per-step invariant monitor over accepted steps."""

    steps: int = 0
    worst_mass_increase: float = 0.0
    worst_energy_defect: float = 0.0
    worst_phi_decrease: dict[int, float] = field(default_factory=dict)

    def observe(self, old: FullState, new: FullState, ref: Reference,
                phi_levels: tuple[int, ...]) -> None:
        self.steps += 1
        m0, m1 = old.positive_mass(), new.positive_mass()
        tiny = np.finfo(float).tiny
        inc = float(np.max((m1 - m0) / np.maximum(m0, tiny), initial=0.0))
        self.worst_mass_increase = max(self.worst_mass_increase, inc)
        defect = np.abs(new.energy() - ref.energy) / np.maximum(ref.energy, tiny)
        self.worst_energy_defect = max(self.worst_energy_defect, float(defect.max(initial=0.0)))
        xi = old.config.xi
        for n in phi_levels:
            c = Fraction(1, xi**n)
            p0, p1 = old.phi_tilde(c), new.phi_tilde(c)
            dec = float(np.max((p0 - p1) / np.maximum(np.abs(p0), tiny), initial=0.0))
            self.worst_phi_decrease[n] = max(self.worst_phi_decrease.get(n, 0.0), dec)

    @property
    def max_phi_decrease(self) -> float:
        return max(self.worst_phi_decrease.values(), default=0.0)


@dataclass
class RunResult:
    records: list[DiagnosticsRecord]
    final: FullState
    monitor: StepMonitor


def output_times(config: ModelConfig) -> np.ndarray:
    count = int(math.floor(config.t_end / config.output_interval + 1e-9))
    times = np.arange(count + 1) * config.output_interval
    if times[-1] < config.t_end * (1 - 1e-12):
        times = np.append(times, config.t_end)
    return times


def run(config: ModelConfig,
        on_record: Callable[[DiagnosticsRecord], None] | None = None,
        initial: FullState | None = None,
        monitor_steps: bool = True) -> RunResult:
    """Integrate from the initial data to ``t_end``, recording on the output grid.

    Steps are shortened to land exactly on each output time.  ``on_record`` is
    called with every record as it is produced, so a caller can stream output
    and keep what was written if a later step fails.
    """
    state = build_initial(config) if initial is None else initial
    ctl = StepControl.from_config(config)
    step = STEPPERS[config.integrator]
    ref = Reference.from_state(state)
    monitor = StepMonitor()
    records: list[DiagnosticsRecord] = []

    def emit(st: FullState) -> None:
        rec = make_record(st, ref)
        records.append(rec)
        if on_record is not None:
            on_record(rec)

    emit(state)
    for target in output_times(config)[1:]:
        while state.time < target:
            dt = cfl_dt(state, ctl)
            landing = state.time + dt >= target * (1 - 1e-14)
            if landing:
                dt = target - state.time
            new = step(state, ctl, dt)
            if landing and new.time >= target * (1 - 1e-14):
                new.time = float(target)
            if monitor_steps:
                monitor.observe(state, new, ref, config.phi_tilde_levels)
            state = new
        emit(state)
    return RunResult(records, state, monitor)
