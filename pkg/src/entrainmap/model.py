"""Novak-Tyson clock equations, single and coupled, with light forcing.

State layout used throughout the package is ``(P1, M1, P2, M2)`` with the
light phase carried separately as hours since the most recent lights-on.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .errors import MissingDependencyError

LightMode = Literal["LD", "DD", "LL"]

# index layout of the flat parameter vector consumed by the jitted kernels
PARAM_FIELDS = (
    "phi1", "phi2", "eps1", "eps2", "k_f", "k_D", "k_L1", "k_L2", "alpha1", "photoperiod_on",
)


@dataclass(frozen=True)
class ModelParams:
    phi1: float = 2.1
    phi2: float = 2.1
    eps1: float = 0.05
    eps2: float = 0.05
    k_f: float = 1.0
    k_D: float = 0.05
    k_L1: float = 0.05
    k_L2: float = 0.0
    alpha1: float = 2.0
    photoperiod_on: float = 12.0

    def __post_init__(self):
        for name in PARAM_FIELDS:
            v = getattr(self, name)
            if not np.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            if v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")
        for name in ("phi1", "phi2", "eps1", "eps2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.photoperiod_on <= 24.0:
            raise ValueError("photoperiod_on must lie in [0, 24]")

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in PARAM_FIELDS}

    def as_array(self) -> np.ndarray:
        """Flat vector for the kernels; the trailing slot holds the light level."""
        return np.array([getattr(self, n) for n in PARAM_FIELDS] + [0.0], dtype=np.float64)


PRESETS: dict[str, ModelParams] = {
    "canonical": ModelParams(),
    "semi": ModelParams(k_L2=0.025),
}


def preset(name: str) -> ModelParams:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def parse_assignments(lines, base: ModelParams | None = None) -> ModelParams:
    """Apply ``key=value`` lines on top of ``base``; ``#`` starts a comment.

    The special key ``preset`` swaps the base before other keys are applied.
    """
    values: dict[str, float] = {}
    chosen = base or PRESETS["canonical"]
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "preset":
            chosen = preset(val)
        elif key in PARAM_FIELDS:
            values[key] = float(val)
        else:
            raise ValueError(f"unknown parameter {key!r}")
    return chosen.replace(**values)


def load_params(path: str | Path, base: ModelParams | None = None) -> ModelParams:
    return parse_assignments(Path(path).read_text().splitlines(), base)


def dump_params(params: ModelParams) -> str:
    return "".join(f"{k}={v!r}\n" for k, v in params.as_dict().items())


@dataclass(frozen=True)
class FullState:
    P1: float
    M1: float
    P2: float
    M2: float
    t_mod: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.t_mod < 24.0:
            raise ValueError("t_mod must lie in [0, 24)")
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("state components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.P1, self.M1, self.P2, self.M2], dtype=np.float64)


def hill_g(P):
    """Repression of transcription by protein, ``1 / (1 + P**4)``."""
    return 1.0 / (1.0 + np.power(P, 4))


def hill_h(P):
    """Saturating protein degradation, ``P / (0.1 + P + 2 P**2)``."""
    return P / (0.1 + P + 2.0 * P * P)


def light(t_mod: float, params: ModelParams, mode: LightMode = "LD") -> int:
    """Lights are on during ``[0, photoperiod_on)`` of each 24 h day."""
    if mode == "DD":
        return 0
    if mode == "LL":
        return 1
    return int((t_mod % 24.0) < params.photoperiod_on)


def cnt_rhs(state: FullState, params: ModelParams, mode: LightMode = "LD") -> np.ndarray:
    """Time derivative of ``(P1, M1, P2, M2)`` for the coupled system."""
    return cnt_rhs_array(state.as_array(), params, light(state.t_mod, params, mode))


def cnt_rhs_array(u: np.ndarray, params: ModelParams, f: float) -> np.ndarray:
    P1, M1, P2, M2 = u
    p = params
    g2 = hill_g(P2)
    return np.array([
        p.phi1 * (M1 - p.k_f * hill_h(P1) - p.k_D * P1 - p.k_L1 * f * P1),
        p.phi1 * p.eps1 * (hill_g(P1) - M1),
        p.phi2 * (M2 - p.k_f * hill_h(P2) - p.k_D * P2 - p.k_L2 * f * P2),
        p.phi2 * p.eps2 * (g2 - M2 + p.alpha1 * M1 * g2),
    ])


def nt_rhs(P: float, M: float, params: ModelParams, f: float) -> np.ndarray:
    """Single light-driven oscillator; identical to the O1 block of the coupled system."""
    u = cnt_rhs_array(np.array([P, M, 1.0, 0.0]), params.replace(alpha1=0.0), f)
    return u[:2]


NullclineKind = Literal["P_dark", "P_light", "M1", "M2_min", "M2_max"]


@dataclass(frozen=True)
class NullclineCurve:
    kind: str
    samples: np.ndarray  # (n, 2) columns P, M

    @property
    def P(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def M(self) -> np.ndarray:
        return self.samples[:, 1]


def nullcline_value(kind: str, P, params: ModelParams, o1_cycle=None):
    if kind == "P_dark":
        return params.k_f * hill_h(P) + params.k_D * P
    if kind == "P_light":
        return params.k_f * hill_h(P) + (params.k_D + params.k_L1) * P
    if kind == "M1":
        return hill_g(P)
    if kind in ("M2_min", "M2_max"):
        if o1_cycle is None:
            raise MissingDependencyError(f"{kind} needs the O1 LD limit cycle")
        m1 = o1_cycle.M.min() if kind == "M2_min" else o1_cycle.M.max()
        return (1.0 + params.alpha1 * m1) * hill_g(P)
    raise ValueError(f"unknown nullcline kind {kind!r}")


def nullcline(
    kind: str,
    params: ModelParams,
    P_range: tuple[float, float] = (0.0, 5.0),
    n_samples: int = 500,
    o1_cycle=None,
) -> NullclineCurve:
    lo, hi = P_range
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if not (0 <= lo < hi):
        raise ValueError("P_range must be an increasing non-negative interval")
    P = np.linspace(lo, hi, n_samples)
    M = nullcline_value(kind, P, params, o1_cycle)
    return NullclineCurve(kind, np.column_stack([P, M]))


def dark_nullcline_intersection(params: ModelParams) -> tuple[float, float]:
    """Where the dark P-nullcline of O1 meets its M-nullcline."""
    from scipy.optimize import brentq

    F = lambda P: params.k_f * hill_h(P) + params.k_D * P - hill_g(P)
    grid = np.linspace(1e-6, 10.0, 2001)
    vals = F(grid)
    idx = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    if idx.size == 0:
        raise ValueError("dark nullclines do not intersect on (0, 10]")
    i = idx[0]
    P = brentq(F, grid[i], grid[i + 1], xtol=1e-14)
    return float(P), float(hill_g(P))
