"""Covert-rate simulation and optimization for modular movable XL antenna
arrays serving mixed near-field/far-field users under near-field wardens."""

__version__ = "0.1.0"

from .channel import (
    AngularSupport,
    ChannelVector,
    PathComponent,
    PolarLocation,
)
from .covertness import CovertnessSpec, CovertRegion
from .geometry import ArrayLayout, uniform_layout

__all__ = [
    "AngularSupport",
    "ArrayLayout",
    "ChannelVector",
    "CovertRegion",
    "CovertnessSpec",
    "PathComponent",
    "PolarLocation",
    "uniform_layout",
    "__version__",
]
