"""Tracked functionals and checkers for the qualitative claims about the flow.

A :class:`DiagnosticsRecord` holds named columns, each an array with one
entry per direction.  Records read back from CSV hold the direction-reduced
value in a length-1 array, so every checker below works on either form and
can be replayed from a file without re-simulating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import ModelConfig
from .lattice import canonical
from .state import FullState, snorm, tail_bound

MONOTONE_SLACK = 1e-12
TREND_SLACK = 1e-9

BASE_COLUMNS = (
    "positive_mass",
    "condensate",
    "energy",
    "energy_defect",
    "snorm",
    "overflow_mass",
    "overflow_energy",
    "clamped_mass",
)


def tail_key(M: int) -> str:
    return f"tail_M{M}"


def phi_key(n: int) -> str:
    return f"phi_tilde_xi_pow_{n}"


def layer_key(rho: int, eps: float) -> str:
    return f"layer_rho{rho}_eps{eps!r}"


def band_key(n: int) -> str:
    return f"band_xi_pow_{n}"


def below_key(n: int) -> str:
    return f"below_xi_pow_{n}"


def concentration_key(n: int) -> str:
    return f"concentration_xi_pow_{n}"


def shell_key(n: int) -> str:
    return f"shell_xi_pow_{n}"


def reduction_for(name: str) -> str:
    """How a column collapses over directions: the worst case for the claim it tests."""
    return "min" if name.startswith("concentration_") else "max"


@dataclass
class DiagnosticsRecord:
    t: float
    values: dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __eq__(self, other):
        if not isinstance(other, DiagnosticsRecord):
            return NotImplemented
        return (
            self.t == other.t
            and list(self.values) == list(other.values)
            and all(np.array_equal(self.values[k], other.values[k]) for k in self.values)
        )

    @property
    def positive_mass(self) -> np.ndarray:
        return self.values["positive_mass"]

    @property
    def condensate(self) -> np.ndarray:
        return self.values["condensate"]

    @property
    def energy(self) -> np.ndarray:
        return self.values["energy"]

    @property
    def energy_defect(self) -> np.ndarray:
        return self.values["energy_defect"]

    @property
    def snorm(self) -> float:
        return float(self.values["snorm"][0])

    def tail_mass(self, M: int) -> np.ndarray:
        return self.values[tail_key(M)]

    def phi_tilde(self, n: int) -> np.ndarray:
        return self.values[phi_key(n)]

    def shell_mass(self, n: int) -> np.ndarray:
        return self.values[shell_key(n)]

    def reduced(self) -> DiagnosticsRecord:
        out = {}
        for name, arr in self.values.items():
            op = np.min if reduction_for(name) == "min" else np.max
            out[name] = np.array([op(arr)], dtype=float)
        return DiagnosticsRecord(self.t, out)


@dataclass
class Reference:
    """Initial per-direction values the records are normalised by."""

    energy: np.ndarray
    positive_mass: np.ndarray

    @classmethod
    def from_state(cls, state: FullState) -> Reference:
        return cls(state.energy(), state.positive_mass())


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den != 0, num / np.where(den != 0, den, 1.0), 0.0)


def xi_pow(xi: int, n: int) -> Fraction:
    return Fraction(1, xi**n)


def make_record(state: FullState, ref: Reference) -> DiagnosticsRecord:
    cfg = state.config
    xi = cfg.xi
    n_dir = state.n_dir
    v: dict[str, np.ndarray] = {}
    energy = state.energy()
    v["positive_mass"] = state.positive_mass()
    v["condensate"] = state.condensate.copy()
    v["energy"] = energy
    v["energy_defect"] = _safe_div(np.abs(energy - ref.energy), ref.energy)
    v["snorm"] = np.full(n_dir, snorm(state))
    v["overflow_mass"] = state.overflow_mass.copy()
    v["overflow_energy"] = state.overflow_energy.copy()
    v["clamped_mass"] = state.clamped_mass.copy()
    for M in cfg.tail_levels:
        v[tail_key(M)] = state.tail_mass(M)
    for n in cfg.phi_tilde_levels:
        v[phi_key(n)] = state.phi_tilde(xi_pow(xi, n))
    for rho, eps in cfg.layer_specs:
        v[layer_key(rho, eps)] = state.layer(rho, eps)
    for n in sorted(set(cfg.coercivity_levels)):
        c = xi_pow(xi, n)
        v[band_key(n)] = state.band_mass(c * Fraction(3, 4), c)
    for n in sorted(set(cfg.coercivity_levels) | set(cfg.growth_levels)):
        v[below_key(n)] = state.mass_below(xi_pow(xi, n), inclusive=True)
    for n in cfg.concentration_levels:
        inside = state.mass_below(xi_pow(xi, n), inclusive=False)
        v[concentration_key(n)] = _safe_div(inside + state.condensate, ref.positive_mass)
    for n in sorted(set(cfg.shell_levels) | set(cfg.growth_levels)):
        v[shell_key(n)] = state.shell_mass(canonical(xi, 1, n))
    # the snorm column is a whole-state quantity; keep it per-direction shaped
    return DiagnosticsRecord(float(state.time), v)


def series(records: Sequence[DiagnosticsRecord], name: str) -> tuple[np.ndarray, np.ndarray]:
    """Times and the ``(n_records, n_columns)`` array of one column."""
    t = np.array([r.t for r in records], dtype=float)
    x = np.array([np.atleast_1d(r.values[name]) for r in records], dtype=float)
    return t, x


# thresholds and comparison solutions


class DomainError(ValueError):
    pass


def t_threshold(eps: float, M: int, rate_C1: float, config: ModelConfig) -> float:
    """Time up to which the tail beyond level M stays below ``eps`` times shell M."""
    arg = eps * config.init_C1 * (M + 1) ** config.gamma / (config.init_C2 * config.init_C3)
    if not arg > 1:
        raise DomainError(f"threshold argument {arg!r} must exceed 1")
    if not rate_C1 > 0:
        raise DomainError("rate_C1 must be positive")
    return math.log(arg) / rate_C1


def tau_schedule(config: ModelConfig, levels: Iterable[int]) -> dict[int, tuple[float, float]]:
    """Window ``[tau_{n-1}, tau_n)`` for each level n."""
    out = {}
    for n in levels:
        lo = t_threshold(config.window_eps, n - 1, config.window_rate, config)
        hi = t_threshold(config.window_eps, n, config.window_rate, config)
        out[n] = (lo, hi)
    return out


def ode_lower_bound(X0: float, C2: float, t: float) -> float:
    """Comparison solution ``t (X0/2) / (1 - t C2 X0 / 2)``; ``inf`` past blow-up."""
    den = 1.0 - t * C2 * X0 / 2.0
    if den <= 0:
        return math.inf
    return t * (X0 / 2.0) / den


def s_gamma(x: float, gamma: float, tol: float = 1e-17) -> float:
    """``sum_n x**n / (n!)**gamma``."""
    total, n, log_term = 0.0, 0, 0.0
    log_x = math.log(x)
    while True:
        term = math.exp(log_term)
        total += term
        n += 1
        log_term = n * log_x - gamma * math.lgamma(n + 1)
        if n > x and math.exp(log_term) < tol * total:
            return total


def norm_growth_prefactor(config: ModelConfig) -> float:
    """``max_M w**M C1 C3**M / (M!)**gamma * S_gamma(C3)``, the a-priori norm prefactor."""
    w, c1, c3, g = config.norm_weight, config.init_C1, config.init_C3, config.gamma
    best, M = 0.0, 0
    while True:
        val = w**M * c3**M / math.factorial(M) ** g
        best = max(best, val)
        if M > 2 and val < best * 1e-6:
            break
        M += 1
    return c1 * best * s_gamma(c3, g)


# checkers


@dataclass
class MonotoneCheck:
    ok: bool
    worst_violation: float


def check_monotone(records: Sequence[DiagnosticsRecord], functional_id: str,
                   slack: float = MONOTONE_SLACK) -> MonotoneCheck:
    """``positive_mass_down`` or ``phi_tilde_up:<n>`` (c = xi**-n), per column.

    The violation is the wrong-way change between consecutive records,
    relative to the earlier value.
    """
    if functional_id == "positive_mass_down":
        name, sign = "positive_mass", 1.0
    elif functional_id.startswith("phi_tilde_up:"):
        name, sign = phi_key(int(functional_id.split(":", 1)[1])), -1.0
    else:
        raise ValueError(f"unknown functional {functional_id!r}")
    if len(records) < 2:
        return MonotoneCheck(True, 0.0)
    _, x = series(records, name)
    step = sign * np.diff(x, axis=0)
    scale = np.maximum(np.abs(x[:-1]), np.finfo(float).tiny)
    with np.errstate(over="ignore"):
        worst = float(np.max(step / scale, initial=0.0))
    return MonotoneCheck(worst <= slack, max(worst, 0.0))


@dataclass
class TailFit:
    fitted_C1: float
    per_level: dict[int, float]
    ok: bool


def _max_log_slope(t: np.ndarray, x: np.ndarray) -> float:
    best = 0.0
    for i in range(len(t) - 1):
        dt = t[i + 1:] - t[i]
        later = x[i + 1:]
        if x[i] == 0:
            if np.any(later > 0):
                return math.inf
            continue
        with np.errstate(divide="ignore"):
            slopes = np.log(later / x[i]) / dt
        slopes = slopes[np.isfinite(slopes)]
        if slopes.size:
            best = max(best, float(slopes.max()))
    return best


def fit_tail_rate(records: Sequence[DiagnosticsRecord], levels: int | Iterable[int]) -> TailFit:
    """Smallest rate C with ``tail_M(t) <= tail_M(s) exp(C (t - s))`` for all record pairs.

    The tail is the direction-sup.  One constant is fitted over all levels
    and then checked against each of them.
    """
    levels = [levels] if isinstance(levels, int) else list(levels)
    if len(records) < 2:
        return TailFit(0.0, {M: 0.0 for M in levels}, True)
    per_level = {}
    data = {}
    for M in levels:
        t, x = series(records, tail_key(M))
        sup = x.max(axis=1)
        data[M] = (t, sup)
        per_level[M] = _max_log_slope(t, sup)
    c1 = max(per_level.values(), default=0.0)
    ok = math.isfinite(c1)
    if ok:
        # exp overflows to inf on long horizons; an infinite bound is never violated
        with np.errstate(over="ignore", invalid="ignore"):
            for t, sup in data.values():
                for i in range(len(t) - 1):
                    bound = sup[i] * np.exp(c1 * (t[i + 1:] - t[i])) * (1 + 1e-12)
                    if np.any(sup[i + 1:] > bound):
                        ok = False
                        break
    return TailFit(c1, per_level, ok)


@dataclass
class CoercivityCheck:
    fitted_constant: float
    ok: bool


def check_coercivity(records: Sequence[DiagnosticsRecord], n: int) -> CoercivityCheck:
    """Ratio of the mass in ``(0, c]`` to ``int_0^t band(3c/4, c)**2 ds`` with c = xi**-n."""
    t, lhs = series(records, below_key(n))
    _, band = series(records, band_key(n))
    sq = band**2
    rhs = np.zeros_like(sq)
    if len(t) > 1:
        rhs[1:] = np.cumsum(0.5 * np.diff(t)[:, None] * (sq[1:] + sq[:-1]), axis=0)
    positive = rhs > 0
    if not positive.any():
        return CoercivityCheck(math.inf, True)
    fitted = float(np.min(lhs[positive] / rhs[positive]))
    return CoercivityCheck(fitted, fitted > 0)


@dataclass
class GrowthCheck:
    fitted_growth: float
    per_direction: np.ndarray | None
    ok: bool
    window: tuple[float, float]
    skipped: str | None = None


def check_condensation_growth(
    records: Sequence[DiagnosticsRecord],
    levels: Iterable[int],
    window_schedule: Mapping[int, tuple[float, float]],
) -> dict[int, GrowthCheck]:
    """Linear-growth constant of the shell at ``xi**-n`` over its time window.

    ``fitted = min_t shell_n(t) / ((t + 1) * initial mass at radii <= xi**-n)``.
    """
    out = {}
    for n in levels:
        lo, hi = window_schedule[n]
        _, below = series(records[:1], below_key(n))
        below0 = below[0]
        t, shell = series(records, shell_key(n))
        if np.all(below0 == 0):
            out[n] = GrowthCheck(0.0, None, True, (lo, hi), "no initial mass below xi**-n")
            continue
        inside = (t >= lo) & (t < hi)
        if not inside.any():
            out[n] = GrowthCheck(0.0, None, True, (lo, hi), "window outside run horizon")
            continue
        ratio = shell[inside] / ((t[inside] + 1)[:, None] * below0[None, :])
        per_dir = ratio.min(axis=0)
        fitted = float(per_dir.min())
        out[n] = GrowthCheck(fitted, per_dir, fitted > 0, (lo, hi))
    return out


@dataclass
class ConcentrationCheck:
    final_fraction: float
    trend_ok: bool
    condensate_ratio: float


def check_concentration(records: Sequence[DiagnosticsRecord],
                        levels: Iterable[int]) -> dict[int, ConcentrationCheck]:
    """Fraction of the initial positive mass found in ``(0, c)`` or the condensate.

    The condensate is counted at full weight, as the test function
    ``(1 - |k|/c)_+`` does at the origin.  The trend must be nondecreasing over
    the final half of the run.
    """
    out = {}
    t, cond = series(records, "condensate")
    _, mass = series(records, "positive_mass")
    ratio = float(np.max(_safe_div(cond[-1], mass[0])))
    late = t >= t[-1] / 2
    for n in levels:
        _, frac = series(records, concentration_key(n))
        tail = frac[late]
        trend = bool(np.all(np.diff(tail, axis=0) >= -TREND_SLACK)) if len(tail) > 1 else True
        out[n] = ConcentrationCheck(float(frac[-1].min()), trend, ratio)
    return out


@dataclass
class TailBoundCheck:
    ok: bool
    worst_ratio: float


def check_appendix_tail(records: Sequence[DiagnosticsRecord], levels: Iterable[int],
                        norm_weight: float) -> TailBoundCheck:
    """Each record's tails against the geometric bound implied by its own norm."""
    worst = 0.0
    for rec in records:
        R = rec.snorm
        for M in levels:
            bound = tail_bound(R, M, norm_weight)
            tail = float(np.max(rec.tail_mass(M)))
            if bound > 0:
                worst = max(worst, tail / bound)
            elif tail > 0:
                worst = math.inf
    return TailBoundCheck(worst <= 1 + 1e-12, worst)


def check_energy(records: Sequence[DiagnosticsRecord], tol: float = 1e-8) -> MonotoneCheck:
    _, defect = series(records, "energy_defect")
    worst = float(defect.max(initial=0.0))
    return MonotoneCheck(worst <= tol, worst)


def verify(records: Sequence[DiagnosticsRecord], config: ModelConfig) -> dict:
    """JSON-ready verdict for every check, ``{name: {ok, constants, worst_violation}}``."""
    doc: dict[str, dict] = {}
    energy = check_energy(records)
    doc["energy_conservation"] = {"ok": energy.ok, "constants": {},
                                  "worst_violation": energy.worst_violation}
    mass = check_monotone(records, "positive_mass_down")
    doc["positive_mass_down"] = {"ok": mass.ok, "constants": {},
                                 "worst_violation": mass.worst_violation}
    for n in config.phi_tilde_levels:
        chk = check_monotone(records, f"phi_tilde_up:{n}")
        doc[f"phi_tilde_up_xi_pow_{n}"] = {"ok": chk.ok, "constants": {},
                                           "worst_violation": chk.worst_violation}
    tail = fit_tail_rate(records, config.tail_levels)
    doc["tail_rate"] = {
        "ok": tail.ok,
        "constants": {"fitted_C1": tail.fitted_C1,
                      **{f"M{M}": v for M, v in tail.per_level.items()}},
        "worst_violation": 0.0,
    }
    appendix = check_appendix_tail(records, config.tail_levels, config.norm_weight)
    doc["appendix_tail_bound"] = {"ok": appendix.ok,
                                  "constants": {"worst_ratio": appendix.worst_ratio},
                                  "worst_violation": max(appendix.worst_ratio - 1, 0.0)}
    if math.isfinite(tail.fitted_C1):
        _, norms = series(records, "snorm")
        t = np.array([r.t for r in records])
        prefactor = float(np.max(norms.max(axis=1) * np.exp(-tail.fitted_C1 * t)))
        doc["norm_growth"] = {
            "ok": True,
            "constants": {"fitted_prefactor": prefactor, "rate": tail.fitted_C1,
                          "a_priori_prefactor": norm_growth_prefactor(config)},
            "worst_violation": 0.0,
        }
    for n in config.coercivity_levels:
        chk = check_coercivity(records, n)
        doc[f"coercivity_xi_pow_{n}"] = {
            "ok": chk.ok,
            "constants": {"fitted_constant": _finite_or_none(chk.fitted_constant)},
            "worst_violation": 0.0,
        }
    windows = tau_schedule(config, config.growth_levels)
    for n, chk in check_condensation_growth(records, config.growth_levels, windows).items():
        doc[f"condensation_growth_xi_pow_{n}"] = {
            "ok": chk.ok,
            "constants": {"fitted_growth": chk.fitted_growth, "window": list(chk.window),
                          "skipped": chk.skipped},
            "worst_violation": 0.0,
        }
    for n, chk in check_concentration(records, config.concentration_levels).items():
        doc[f"concentration_xi_pow_{n}"] = {
            "ok": chk.trend_ok,
            "constants": {"final_fraction": chk.final_fraction,
                          "condensate_ratio": chk.condensate_ratio},
            "worst_violation": 0.0,
        }
    return doc


def _finite_or_none(x: float):
    return x if math.isfinite(x) else None
