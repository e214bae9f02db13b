"""Entrainment maps for a central/peripheral pair of circadian oscillators."""
import os

os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

from .model import ModelParams, FullState, preset  # noqa: E402
from .odeint import IntegratorConfig, EventSpec, integrate  # noqa: E402
from .cycles import LimitCycle, AngleFrame, find_limit_cycle  # noqa: E402
from .maps import (  # noqa: E402
    EntrainmentMap,
    MapPoint,
    MapStep,
    SectionSpec,
    iterate_to_entrainment,
)

__all__ = [
    "ModelParams", "FullState", "preset", "IntegratorConfig", "EventSpec", "integrate",
    "LimitCycle", "AngleFrame", "find_limit_cycle", "EntrainmentMap", "MapPoint", "MapStep",
    "SectionSpec", "iterate_to_entrainment",
]
