"""Modular movable array geometry: subarray centers, per-antenna positions,
movement-region and spacing feasibility."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ArrayLayout:
    """An axis-aligned array of ``num_subarrays`` contiguous subarrays.

    Each subarray holds ``num_antennas / num_subarrays`` antennas at
    half-wavelength pitch; only the subarray centers move.  Centers are kept
    sorted ascending.  ``region_m`` is the closed interval the centers must
    stay inside.
    """

    wavelength_m: float
    num_antennas: int
    num_subarrays: int
    centers_m: tuple[float, ...]
    region_m: tuple[float, float]

    def __post_init__(self) -> None:
        if self.wavelength_m <= 0:
            raise ValueError("wavelength must be positive")
        if self.num_antennas <= 0 or self.num_subarrays <= 0:
            raise ValueError("antenna/subarray counts must be positive")
        if self.num_antennas % self.num_subarrays != 0:
            raise ValueError(
                f"{self.num_subarrays} subarrays do not divide "
                f"{self.num_antennas} antennas"
            )
        if len(self.centers_m) != self.num_subarrays:
            raise ValueError("need one center per subarray")
        if self.region_m[0] > self.region_m[1]:
            raise ValueError("region interval is inverted")
        object.__setattr__(self, "centers_m", tuple(sorted(float(c) for c in self.centers_m)))

    @property
    def spacing_m(self) -> float:
        """Inter-antenna pitch d = lambda/2."""
        return self.wavelength_m / 2.0

    @property
    def antennas_per_subarray(self) -> int:
        return self.num_antennas // self.num_subarrays

    @property
    def min_center_gap_m(self) -> float:
        """Smallest allowed center-to-center distance (subarray width)."""
        return self.antennas_per_subarray * self.spacing_m

    @property
    def aperture_m(self) -> float:
        """Aperture of the equivalent contiguous array, N*d."""
        return self.num_antennas * self.spacing_m

    def with_centers(self, centers_m) -> "ArrayLayout":
        """Same array with the subarrays moved to ``centers_m``."""
        return ArrayLayout(
            wavelength_m=self.wavelength_m,
            num_antennas=self.num_antennas,
            num_subarrays=self.num_subarrays,
            centers_m=tuple(float(c) for c in centers_m),
            region_m=self.region_m,
        )


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    violating_pairs: tuple[tuple[int, int], ...] = field(default=())
    out_of_region: tuple[int, ...] = field(default=())


def default_region(num_antennas: int, wavelength_m: float) -> tuple[float, float]:
    """Default movement region [-(N-1)d, (N-1)d]."""
    half = (num_antennas - 1) * wavelength_m / 2.0
    return (-half, half)


def antenna_positions(layout: ArrayLayout) -> np.ndarray:
    """Axis coordinates of all N antennas, subarray by subarray.

    Antenna n (local index nt inside subarray m) sits at
    ``q_m + (2*nt - Nt - 1)/2 * d`` for nt = 1..Nt.
    """
    nt = layout.antennas_per_subarray
    d = layout.spacing_m
    offsets = (2.0 * np.arange(1, nt + 1) - nt - 1) / 2.0 * d
    centers = np.asarray(layout.centers_m)
    return (centers[:, None] + offsets[None, :]).ravel()


def uniform_layout(
    num_antennas: int,
    num_subarrays: int,
    wavelength_m: float,
    region_m: tuple[float, float] | None = None,
) -> ArrayLayout:
    """Fixed-array reference layout: consecutive center gaps of exactly Nt*d,
    centered on the origin, so the antennas form one contiguous
    half-wavelength array."""
    if num_antennas % num_subarrays != 0:
        raise ValueError(
            f"{num_subarrays} subarrays do not divide {num_antennas} antennas"
        )
    nt = num_antennas // num_subarrays
    d = wavelength_m / 2.0
    if region_m is None:
        region_m = default_region(num_antennas, wavelength_m)
    centers = (2.0 * np.arange(1, num_subarrays + 1) - num_subarrays - 1) / 2.0 * nt * d
    if centers[0] < region_m[0] or centers[-1] > region_m[1]:
        raise ValueError("movement region too narrow for the uniform layout")
    layout = ArrayLayout(
        wavelength_m=wavelength_m,
        num_antennas=num_antennas,
        num_subarrays=num_subarrays,
        centers_m=tuple(centers),
        region_m=region_m,
    )
    return layout


def is_uniform(layout: ArrayLayout, tol: float = 1e-9) -> bool:
    """True when consecutive center gaps all equal the subarray width."""
    gaps = np.diff(layout.centers_m)
    return bool(np.all(np.abs(gaps - layout.min_center_gap_m) <= tol * max(1.0, layout.min_center_gap_m)))


def check_feasible(layout: ArrayLayout, tol: float = 1e-12) -> FeasibilityReport:
    """Check the pairwise spacing constraint |q_i - q_j| >= Nt*d (all i != j)
    and the region membership of every center."""
    centers = np.asarray(layout.centers_m)
    gap = layout.min_center_gap_m
    pairs = []
    m = layout.num_subarrays
    for i in range(m):
        for j in range(i + 1, m):
            if abs(centers[i] - centers[j]) < gap - tol:
                pairs.append((i, j))
    lo, hi = layout.region_m
    outside = [i for i, c in enumerate(centers) if c < lo - tol or c > hi + tol]
    return FeasibilityReport(
        ok=not pairs and not outside,
        violating_pairs=tuple(pairs),
        out_of_region=tuple(outside),
    )


def clamp_to_region(candidate, region_m: tuple[float, float]) -> np.ndarray:
    """Clip every coordinate into [q_min, q_max]."""
    lo, hi = region_m
    return np.clip(np.asarray(candidate, dtype=float), lo, hi)
