"""Model configuration, validation and named presets."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields, replace
from typing import Any

from .lattice import LatticeRadius, canonical, is_prime

PROFILES = ("constant", "sinusoidal", "random-band")
INTEGRATORS = ("rk4", "patankar")


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending field."""

    def __init__(self, key: str, constraint: str):
        self.key = key
        self.constraint = constraint
        super().__init__(f"{key}: {constraint}")


@dataclass(frozen=True)
class ModelConfig:
    """All parameters of one simulation.  Defaults are the ``default`` preset.

    ``init_C1``, ``init_C2``, ``init_C3`` bound the initial shell amplitudes:
    the shell at radius ``xi**-rho`` starts at ``A * init_C3**rho / (rho!)**gamma``
    with the angular profile value ``A`` in ``[init_C2, init_C1]``.
    """

    xi: int = 3
    norm_weight: float = 2.0
    gamma: float = 1.0
    init_C1: float = 30.0
    init_C2: float = 1.0
    init_C3: float = 1.0
    rho_max: int = 6
    eta_max: int = 12
    r_max: tuple[int, int] = (4, 0)
    n_dir: int = 64
    angular_profile: str = "random-band"
    seed: int = 0
    condensate_channel: bool = True
    integrator: str = "rk4"
    dt_max: float = 0.1
    cfl_safety: float = 1.0
    positivity_tol: float = 1e-14
    max_rejects: int = 30
    drop_threshold: float = 1e-30
    t_end: float = 50.0
    output_interval: float = 0.1
    # diagnostics; radii are given as exponents n meaning xi**-n
    tail_levels: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    phi_tilde_levels: tuple[int, ...] = (0, 1, 2, 3, 4, 5, 6)
    shell_levels: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    layer_specs: tuple[tuple[int, float], ...] = ((1, 0.5), (2, 0.5), (3, 0.5))
    coercivity_levels: tuple[int, ...] = (0, 1, 2)
    concentration_levels: tuple[int, ...] = (1,)
    growth_levels: tuple[int, ...] = (2, 3, 4)
    window_eps: float = 1.0
    window_rate: float = 1.0
    picard_nodes: int = 64

    def __post_init__(self):
        self.validate()

    @property
    def r_max_radius(self) -> LatticeRadius:
        return canonical(self.xi, *self.r_max)

    def validate(self) -> None:
        if not isinstance(self.xi, int) or self.xi < 3 or not is_prime(self.xi):
            raise ConfigError("xi", "Ξ must be prime ≥ 3")
        if not self.norm_weight > 1:
            raise ConfigError("norm_weight", "norm weight must be > 1")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma", "gamma must lie in (0, 1]")
        if not self.init_C1 > self.init_C2 > 0:
            raise ConfigError("init_C1", "need init_C1 > init_C2 > 0")
        if not self.init_C3 > 0:
            raise ConfigError("init_C3", "init_C3 must be > 0")
        ratio = self.init_C1 / (self.init_C2 * self.init_C3)
        if not ratio > 10:
            raise ConfigError(
                "init_C1", f"init_C1/(init_C2*init_C3) = {ratio:g} must be > 10"
            )
        if self.rho_max < 0:
            raise ConfigError("rho_max", "rho_max must be >= 0")
        if self.eta_max < self.rho_max:
            raise ConfigError("eta_max", "eta_max must be >= rho_max")
        m, eta = self.r_max
        if m < 1 or eta < 0:
            raise ConfigError("r_max", "r_max must be a positive lattice radius")
        if self.r_max_radius < canonical(self.xi, 1, 0):
            # the initial shell at radius 1 must fit
            raise ConfigError("r_max", "r_max must be >= 1")
        if self.n_dir < 1:
            raise ConfigError("n_dir", "n_dir must be >= 1")
        if self.angular_profile not in PROFILES:
            raise ConfigError("angular_profile", f"must be one of {PROFILES}")
        if self.integrator not in INTEGRATORS:
            raise ConfigError("integrator", f"must be one of {INTEGRATORS}")
        for key in ("dt_max", "t_end", "output_interval", "drop_threshold"):
            value = getattr(self, key)
            if key == "t_end":
                if value < 0:
                    raise ConfigError(key, "must be >= 0")
            elif not value > 0:
                raise ConfigError(key, "must be > 0")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError("cfl_safety", "must lie in (0, 1]")
        if self.positivity_tol < 0:
            raise ConfigError("positivity_tol", "must be >= 0")
        if self.picard_nodes < 2:
            raise ConfigError("picard_nodes", "must be >= 2")

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = _untuple(value)
        return out


def _untuple(value):
    if isinstance(value, tuple):
        return [_untuple(v) for v in value]
    return value


_SEQUENCE_KEYS = {
    "tail_levels": int,
    "phi_tilde_levels": int,
    "shell_levels": int,
    "coercivity_levels": int,
    "concentration_levels": int,
    "growth_levels": int,
}


def _coerce(key: str, value: Any, default: Any) -> Any:
    if key == "r_max":
        if isinstance(value, bool):
            raise ConfigError(key, "expected an integer or [m, eta]")
        if isinstance(value, int):
            return (value, 0)
        if isinstance(value, (list, tuple)) and len(value) == 2 and all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            return (value[0], value[1])
        raise ConfigError(key, "expected an integer or [m, eta]")
    if key == "layer_specs":
        try:
            return tuple((int(rho), float(eps)) for rho, eps in value)
        except (TypeError, ValueError):
            raise ConfigError(key, "expected a list of [rho, eps] pairs") from None
    if key in _SEQUENCE_KEYS:
        if not isinstance(value, (list, tuple)) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            raise ConfigError(key, "expected a list of integers")
        return tuple(value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected a boolean, got {type(value).__name__}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {type(value).__name__}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {type(value).__name__}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {type(value).__name__}")
        return value
    return value


REQUIRED_KEYS = ("xi", "init_C1", "init_C2", "init_C3", "gamma")


def config_from_mapping(doc: dict[str, Any], base: ModelConfig | None = None) -> ModelConfig:
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "expected a key-value mapping")
    base = base or ModelConfig()
    known = {f.name: getattr(base, f.name) for f in fields(ModelConfig)}
    updates = {}
    for key, value in doc.items():
        if key not in known:
            raise ConfigError(key, "unknown key")
        updates[key] = _coerce(key, value, known[key])
    return replace(base, **updates)


def parse_config(text: str) -> ModelConfig:
    """Parse a flat JSON key-value document into a validated config.

    The keys in ``REQUIRED_KEYS`` must be present; everything else falls back
    to the ``default`` preset.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "expected a key-value mapping")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ConfigError(key, "missing required key")
    return config_from_mapping(doc)


_PRESETS: dict[str, dict[str, Any]] = {
    "default": {},
    # level-8 data makes the common grid 3**8 times finer; fewer directions and
    # a shorter horizon keep it at desk scale
    "deep": {"rho_max": 8, "r_max": (1, 0), "n_dir": 4, "t_end": 5.0},
    "radial": {"angular_profile": "constant"},
    "nonradial-sin": {"angular_profile": "sinusoidal"},
    "no-condensate-channel": {"condensate_channel": False},
    "picard-xval": {
        "angular_profile": "constant",
        "rho_max": 3,
        "n_dir": 2,
        "t_end": 0.01,
        "output_interval": 0.01,
    },
}


def preset_names() -> list[str]:
    return list(_PRESETS)


def preset(name: str) -> ModelConfig:
    try:
        overrides = _PRESETS[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(_PRESETS)}"
        ) from None
    return replace(ModelConfig(), **overrides)
