"""Shell states, the weighted lattice norm and initial data.

A :class:`ShellState` is the sparse, exact view of one angular direction: a
map from canonical radii to shell amplitudes plus the condensate atom at the
origin.  A :class:`FullState` stores all directions on a common dense grid
``j * xi**-L`` (``L`` the deepest level present), which is closed under the
collision sums and differences and is what the integrators advance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np

from .config import ConfigError, ModelConfig
from .lattice import LatticeRadius, canonical

Number = float | Fraction


def _as_fraction(x: Number | LatticeRadius) -> Fraction:
    if isinstance(x, LatticeRadius):
        return x.value
    return Fraction(x)


@dataclass
class ShellState:
    """One direction: ``shells`` maps radius to amplitude (d|k|-mass)."""

    shells: dict[LatticeRadius, float] = field(default_factory=dict)
    condensate: float = 0.0
    overflow_mass: float = 0.0
    overflow_energy: float = 0.0
    clamped_mass: float = 0.0

    def support(self) -> list[LatticeRadius]:
        return sorted(r for r, g in self.shells.items() if g != 0 and not r.is_zero)

    def max_level(self) -> int:
        return max((r.eta for r in self.support()), default=0)


class ShellGrid:
    """Dense radii ``j * xi**-level`` for ``j = 0..n``; index 0 is the origin."""

    def __init__(self, xi: int, level: int, n: int):
        self.xi = xi
        self.level = level
        self.n = n
        self.scale = xi**level
        self.h = 1.0 / self.scale
        self.index = np.arange(n + 1)
        self.radii = self.index / self.scale

    @classmethod
    def for_config(cls, config: ModelConfig, level: int) -> ShellGrid:
        r_max = config.r_max_radius
        n = (r_max.m * config.xi**level) // config.xi**r_max.eta
        return cls(config.xi, level, n)

    def __eq__(self, other):
        return (
            isinstance(other, ShellGrid)
            and (self.xi, self.level, self.n) == (other.xi, other.level, other.n)
        )

    def __repr__(self):
        return f"ShellGrid(xi={self.xi}, level={self.level}, n={self.n})"

    @cached_property
    def levels(self) -> np.ndarray:
        """Lattice level of each grid radius (-1 at the origin)."""
        lev = np.full(self.n + 1, self.level, dtype=np.int64)
        j = self.index.copy()
        j[0] = 1
        for _ in range(self.level):
            hit = (j % self.xi == 0) & (lev > 0)
            if not hit.any():
                break
            lev[hit] -= 1
            j[hit] //= self.xi
        lev[0] = -1
        return lev

    @cached_property
    def level_matrix(self) -> np.ndarray:
        """``(n+1, level+1)`` indicator of each radius' level, origin excluded."""
        mat = np.zeros((self.n + 1, self.level + 1))
        mat[self.index[1:], self.levels[1:]] = 1.0
        return mat

    def radius_at(self, j: int) -> LatticeRadius:
        return canonical(self.xi, int(j), self.level)

    def index_of(self, r: LatticeRadius) -> int | None:
        if r.is_zero:
            return 0
        if r.eta > self.level:
            return None
        j = r.m * self.xi ** (self.level - r.eta)
        return j if j <= self.n else None

    def cut(self, x: Number | LatticeRadius) -> Fraction:
        """Position of radius ``x`` in grid units, exact."""
        return _as_fraction(x) * self.scale

    def mask_below(self, x: Number | LatticeRadius, inclusive: bool) -> np.ndarray:
        k = self.cut(x)
        mask = self.index <= k if inclusive else self.index < k
        mask[0] = False
        return mask

    def mask_between(self, lo, hi) -> np.ndarray:
        lo_k, hi_k = self.cut(lo), self.cut(hi)
        mask = (self.index >= lo_k) & (self.index <= hi_k)
        mask[0] = False
        return mask


@dataclass
class FullState:
    """All directions on a common grid, at rescaled time ``time``.

    ``amps[:, j]`` is the amplitude at radius ``j * xi**-level``; column 0 is
    always zero (the condensate is kept separately).
    """

    grid: ShellGrid
    amps: np.ndarray
    condensate: np.ndarray
    overflow_mass: np.ndarray
    overflow_energy: np.ndarray
    clamped_mass: np.ndarray
    time: float
    config: ModelConfig
    dropped_mass: np.ndarray | None = None

    def __post_init__(self):
        if self.dropped_mass is None:
            self.dropped_mass = np.zeros(self.n_dir)

    @property
    def n_dir(self) -> int:
        return self.amps.shape[0]

    @property
    def angles(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_dir) / self.n_dir

    @classmethod
    def zeros(cls, config: ModelConfig, level: int = 0, n_dir: int | None = None) -> FullState:
        grid = ShellGrid.for_config(config, level)
        n_dir = config.n_dir if n_dir is None else n_dir
        z = np.zeros(n_dir)
        return cls(grid, np.zeros((n_dir, grid.n + 1)), z.copy(), z.copy(),
                   z.copy(), z.copy(), 0.0, config)

    @classmethod
    def from_directions(
        cls,
        directions: Sequence[ShellState],
        config: ModelConfig,
        time: float = 0.0,
        level: int | None = None,
    ) -> FullState:
        if not directions:
            raise ValueError("need at least one direction")
        if level is None:
            level = max(d.max_level() for d in directions)
        if level > config.eta_max:
            raise ConfigError("eta_max", f"state has level {level} > eta_max")
        state = cls.zeros(config, level, n_dir=len(directions))
        r_max = config.r_max_radius
        for i, d in enumerate(directions):
            for r, g in d.shells.items():
                if g == 0:
                    continue
                if g < 0:
                    raise ValueError(f"negative amplitude {g} at {r!r}")
                if r > r_max:
                    raise ValueError(f"radius {r!r} exceeds r_max")
                j = state.grid.index_of(r)
                if j is None or j == 0:
                    raise ValueError(f"radius {r!r} not representable on {state.grid}")
                state.amps[i, j] += g
            state.condensate[i] = d.condensate
            state.overflow_mass[i] = d.overflow_mass
            state.overflow_energy[i] = d.overflow_energy
            state.clamped_mass[i] = d.clamped_mass
        state.time = time
        return state

    def direction(self, i: int) -> ShellState:
        row = self.amps[i]
        shells = {self.grid.radius_at(j): float(row[j]) for j in np.flatnonzero(row)}
        return ShellState(
            shells,
            float(self.condensate[i]),
            float(self.overflow_mass[i]),
            float(self.overflow_energy[i]),
            float(self.clamped_mass[i]),
        )

    @property
    def directions(self) -> list[ShellState]:
        return [self.direction(i) for i in range(self.n_dir)]

    def copy(self) -> FullState:
        return replace(
            self,
            amps=self.amps.copy(),
            condensate=self.condensate.copy(),
            overflow_mass=self.overflow_mass.copy(),
            overflow_energy=self.overflow_energy.copy(),
            clamped_mass=self.clamped_mass.copy(),
            dropped_mass=self.dropped_mass.copy(),
        )

    # per-direction functionals, each an (n_dir,) array

    def positive_mass(self) -> np.ndarray:
        return self.amps.sum(axis=1)

    def energy(self) -> np.ndarray:
        """Radius-weighted mass including what left through ``r_max``."""
        return self.amps @ self.grid.radii + self.overflow_energy

    def level_sums(self) -> np.ndarray:
        return self.amps @ self.grid.level_matrix

    def tail_mass(self, M: int) -> np.ndarray:
        sums = self.level_sums()
        return sums[:, M + 1:].sum(axis=1)

    def layer(self, rho: int, eps: float) -> np.ndarray:
        g = self.grid
        top = (1 + eps) * float(self.config.xi) ** -rho
        weight = np.where((g.levels >= rho) & (g.index > 0),
                          np.maximum(top - g.radii, 0.0), 0.0)
        return self.amps @ weight

    def phi_tilde(self, c: Number) -> np.ndarray:
        g = self.grid
        weight = np.where(g.mask_below(c, inclusive=False), float(c) - g.radii, 0.0)
        return self.amps @ weight + float(c) * self.condensate

    def band_mass(self, lo: Number, hi: Number) -> np.ndarray:
        return self.amps[:, self.grid.mask_between(lo, hi)].sum(axis=1)

    def mass_below(self, c: Number, inclusive: bool = True) -> np.ndarray:
        return self.amps[:, self.grid.mask_below(c, inclusive)].sum(axis=1)

    def shell_mass(self, r: LatticeRadius) -> np.ndarray:
        j = self.grid.index_of(r)
        if j is None:
            return np.zeros(self.n_dir)
        return self.amps[:, j].copy()


def angular_profile(config: ModelConfig) -> np.ndarray:
    """Per-direction amplitude scale in ``[init_C2, init_C1]``."""
    lo, hi = config.init_C2, config.init_C1
    theta = 2 * np.pi * np.arange(config.n_dir) / config.n_dir
    if config.angular_profile == "constant":
        return np.full(config.n_dir, lo)
    if config.angular_profile == "sinusoidal":
        return lo + (hi - lo) * (1 + np.sin(theta)) / 2
    rng = np.random.default_rng(config.seed)
    return rng.uniform(lo, hi, size=config.n_dir)


def initial_shell_amplitude(config: ModelConfig, rho: int) -> float:
    """Lower-bound amplitude ``init_C3**rho / (rho!)**gamma`` (before the profile)."""
    return config.init_C3**rho / math.factorial(rho) ** config.gamma


def build_initial(config: ModelConfig) -> FullState:
    """Shells at radii ``xi**-rho``, ``rho = 0..rho_max``, no condensate."""
    config.validate()
    state = FullState.zeros(config, level=config.rho_max)
    profile = angular_profile(config)
    for rho in range(config.rho_max + 1):
        j = state.grid.index_of(canonical(config.xi, 1, rho))
        state.amps[:, j] = profile * initial_shell_amplitude(config, rho)
    return state


def _snorm_from_level_sums(level_sums: np.ndarray, condensate: np.ndarray,
                           weight: float) -> float:
    best = float(np.max(np.abs(condensate), initial=0.0))
    if level_sums.size:
        scaled = level_sums.max(axis=0) * weight ** np.arange(level_sums.shape[1])
        best = max(best, float(scaled.max()))
    return best


def snorm(state: FullState | ShellState | Sequence[ShellState],
          norm_weight: float | None = None) -> float:
    """Weighted lattice norm: max of the condensate sup and of
    ``weight**eta * sup_dir sum_{level eta} |g|`` over levels."""
    if isinstance(state, FullState):
        weight = state.config.norm_weight if norm_weight is None else norm_weight
        sums = np.abs(state.amps) @ state.grid.level_matrix
        return _snorm_from_level_sums(sums, state.condensate, weight)
    if norm_weight is None:
        raise ValueError("norm_weight is required for sparse states")
    dirs = [state] if isinstance(state, ShellState) else list(state)
    best = max((abs(d.condensate) for d in dirs), default=0.0)
    per_level: dict[int, float] = {}
    for d in dirs:
        sums: dict[int, float] = {}
        for r, g in d.shells.items():
            if not r.is_zero:
                sums[r.eta] = sums.get(r.eta, 0.0) + abs(g)
        for eta, s in sums.items():
            per_level[eta] = max(per_level.get(eta, 0.0), s)
    for eta, s in per_level.items():
        best = max(best, norm_weight**eta * s)
    return best


class ShellFunctionals:
    """Functionals of one direction, evaluated exactly on the sparse map."""

    def __init__(self, state: ShellState, xi: int | None = None):
        self._items = [(r, g) for r, g in state.shells.items() if not r.is_zero]
        self._xi = xi
        self.condensate = state.condensate
        self.positive_mass = sum(g for _, g in self._items)
        self.energy = sum(float(r) * g for r, g in self._items) + state.overflow_energy

    def tail_mass(self, M: int) -> float:
        return sum(g for r, g in self._items if r.eta > M)

    def layer(self, rho: int, eps: float) -> float:
        total = 0.0
        for r, g in self._items:
            if r.eta >= rho:
                xi = self._xi or r.xi
                total += g * max((1 + eps) * float(xi) ** -rho - float(r), 0.0)
        return total

    def phi_tilde(self, c: Number) -> float:
        cf = Fraction(c)
        return sum(g * (float(c) - float(r)) for r, g in self._items
                   if r.value < cf) + float(c) * self.condensate

    def band_mass(self, lo: Number, hi: Number) -> float:
        lo_f, hi_f = Fraction(lo), Fraction(hi)
        return sum(g for r, g in self._items if lo_f <= r.value <= hi_f)


def functionals(state: ShellState, xi: int | None = None) -> ShellFunctionals:
    return ShellFunctionals(state, xi)


def tail_bound(R: float, M: int, norm_weight: float) -> float:
    """Geometric bound ``R * w**-(M+1) / (1 - 1/w)`` on the mass beyond level M."""
    return R * norm_weight ** -(M + 1) / (1 - 1 / norm_weight)


def appendix_tail_bound(state: FullState, M: int, R: float | None = None) -> bool:
    """Whether every direction's tail beyond level ``M`` obeys the geometric bound."""
    R = snorm(state) if R is None else R
    bound = tail_bound(R, M, state.config.norm_weight)
    return bool(np.all(state.tail_mass(M) <= bound * (1 + 1e-12)))
