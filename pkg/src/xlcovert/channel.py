"""Near-field/far-field steering vectors, multipath channel synthesis, and
steering-vector correlation functions (exact summation, per-subarray
approximation, Fresnel-integral approximation)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .geometry import ArrayLayout, antenna_positions, is_uniform

RAYLEIGH_GAIN_FACTOR = 0.37  # array-gain (not phase) near/far boundary factor


@dataclass(frozen=True)
class PolarLocation:
    """A source/receiver position seen from the array: spatial angle
    ``theta`` (sine of the physical angle, in [-1, 1]) and range in meters."""

    theta: float
    range_m: float

    def __post_init__(self) -> None:
        if not -1.0 <= self.theta <= 1.0:
            raise ValueError(f"spatial angle {self.theta} outside [-1, 1]")
        if self.range_m <= 0:
            raise ValueError(f"range {self.range_m} must be positive")


@dataclass(frozen=True)
class PathComponent:
    """One propagation path: complex amplitude and scatterer/user location."""

    gain: complex
    location: PolarLocation

    def __post_init__(self) -> None:
        if not np.isfinite(self.gain):
            raise ValueError("path gain must be finite")


@dataclass(frozen=True)
class AngularSupport:
    """Angular interval where a swept far-field beam keeps at least
    ``10**(-mu_db/10)`` of its peak gain on a near-field observer."""

    theta_lo: float
    theta_hi: float
    mu_db: float
    grid_step: float
    peak_theta: float = 0.0
    peak_gain: float = 0.0
    fragment_count: int = 1

    def __post_init__(self) -> None:
        if not (-1.0 <= self.theta_lo <= self.theta_hi <= 1.0):
            raise ValueError("support interval must be inside [-1, 1]")

    def contains(self, theta: float) -> bool:
        return self.theta_lo <= theta <= self.theta_hi

    @property
    def width(self) -> float:
        return self.theta_hi - self.theta_lo


class ChannelVector:
    """Length-N complex channel from the array to one receiver."""

    __slots__ = ("coefficients", "owner")

    def __init__(self, coefficients: np.ndarray, owner: str = ""):
        coeffs = np.asarray(coefficients, dtype=complex).copy()
        coeffs.setflags(write=False)
        self.coefficients = coeffs
        self.owner = owner

    def __len__(self) -> int:
        return len(self.coefficients)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def to_rows(self):
        """(index, real, imag) rows for CSV debugging dumps."""
        return [(n, c.real, c.imag) for n, c in enumerate(self.coefficients)]


def _phases(positions: np.ndarray, theta: float, range_m: float, wavelength_m: float) -> np.ndarray:
    """Near-field phase profile (2*pi/lambda) * (q*theta - q^2*(1-theta^2)/(2r))."""
    return (2.0 * np.pi / wavelength_m) * (
        positions * theta - positions**2 * (1.0 - theta**2) / (2.0 * range_m)
    )


def steering_vector(layout: ArrayLayout, loc: PolarLocation) -> np.ndarray:
    """Unit-norm spherical-wavefront steering vector toward ``loc``."""
    pos = antenna_positions(layout)
    phases = _phases(pos, loc.theta, loc.range_m, layout.wavelength_m)
    return np.exp(-1j * phases) / np.sqrt(layout.num_antennas)


def far_field_steering(layout: ArrayLayout, theta: float) -> np.ndarray:
    """Planar-wavefront steering vector: the quadratic phase term dropped."""
    if not -1.0 <= theta <= 1.0:
        raise ValueError(f"spatial angle {theta} outside [-1, 1]")
    pos = antenna_positions(layout)
    phases = (2.0 * np.pi / layout.wavelength_m) * pos * theta
    return np.exp(-1j * phases) / np.sqrt(layout.num_antennas)


def classic_rayleigh_distance(aperture_m: float, wavelength_m: float) -> float:
    """Phase-based near/far boundary 2*D^2/lambda."""
    if aperture_m <= 0:
        raise ValueError("aperture must be positive")
    return 2.0 * aperture_m**2 / wavelength_m


def effective_rayleigh_distance(aperture_m: float, theta: float, wavelength_m: float) -> float:
    """Array-gain-based near/far boundary 0.37 * 2*D^2*(1-theta^2)/lambda."""
    return RAYLEIGH_GAIN_FACTOR * classic_rayleigh_distance(aperture_m, wavelength_m) * (
        1.0 - theta**2
    )


def synth_channel(
    layout: ArrayLayout,
    los: PathComponent,
    nlos: list[PathComponent] | tuple[PathComponent, ...] = (),
    owner: str = "",
) -> ChannelVector:
    """Multipath channel h = sqrt(N) conj(g) a(los) + sqrt(N/L) sum_l conj(g_l) a_l.

    Stored as the column vector h; the row form h^H is its conjugate
    transpose.  With no scatterers the second term is absent.
    """
    n = layout.num_antennas
    h = np.sqrt(n) * np.conj(los.gain) * steering_vector(layout, los.location)
    if nlos:
        scale = np.sqrt(n / len(nlos))
        for comp in nlos:
            h = h + scale * np.conj(comp.gain) * steering_vector(layout, comp.location)
    return ChannelVector(h, owner=owner)


def correlation(layout: ArrayLayout, loc_i: PolarLocation, loc_j: PolarLocation) -> float:
    """|a^H(loc_i) a(loc_j)| by exact summation over all N antennas."""
    a_i = steering_vector(layout, loc_i)
    a_j = steering_vector(layout, loc_j)
    return float(abs(np.vdot(a_i, a_j)))


def _modular_window_m(layout: ArrayLayout) -> float:
    """Range below which the per-subarray approximation degrades: 2*(Nt*d)^2/lambda."""
    return 2.0 * layout.min_center_gap_m**2 / layout.wavelength_m


def dirichlet_ratio(omega: np.ndarray, n_sub: int) -> np.ndarray:
    """sin(Nt*pi*w/2)/sin(pi*w/2) with the removable singularity at w in 2Z
    replaced by its limit Nt*cos(Nt*pi*w/2)/cos(pi*w/2)."""
    omega = np.asarray(omega, dtype=float)
    den = np.sin(np.pi * omega / 2.0)
    num = np.sin(n_sub * np.pi * omega / 2.0)
    singular = np.abs(den) < 1e-9
    safe_den = np.where(singular, 1.0, den)
    ratio = num / safe_den
    limit = n_sub * np.cos(n_sub * np.pi * omega / 2.0) / np.cos(np.pi * omega / 2.0)
    return np.where(singular, limit, ratio)


def correlation_modular_approx(
    layout: ArrayLayout, loc_i: PolarLocation, loc_j: PolarLocation
) -> float:
    """Per-subarray correlation approximation.

    (1/N) |sum_m exp(j*2pi/lambda*(q_m*W_theta + q_m^2*W_r)) * D(W_m)| with
    W_m = 2*q_m*W_r + W_theta and D the half-wavelength Dirichlet kernel.
    Valid when both ranges exceed 2*(Nt*d)^2/lambda; warns (computes anyway)
    outside that window.
    """
    window = _modular_window_m(layout)
    if loc_i.range_m <= window or loc_j.range_m <= window:
        warnings.warn(
            f"ranges ({loc_i.range_m:.3g}, {loc_j.range_m:.3g}) m at or below the "
            f"approximation window {window:.3g} m; result may be inaccurate",
            stacklevel=2,
        )
    omega_theta = loc_j.theta - loc_i.theta
    omega_r = (1.0 - loc_i.theta**2) / (2.0 * loc_i.range_m) - (
        1.0 - loc_j.theta**2
    ) / (2.0 * loc_j.range_m)
    centers = np.asarray(layout.centers_m)
    omega_m = 2.0 * centers * omega_r + omega_theta
    phase = (2.0 * np.pi / layout.wavelength_m) * (centers * omega_theta + centers**2 * omega_r)
    amp = dirichlet_ratio(omega_m, layout.antennas_per_subarray)
    return float(abs(np.sum(np.exp(1j * phase) * amp)) / layout.num_antennas)


def fresnel_G(beta: float) -> complex:
    """(C(beta) + j*S(beta))/beta with C, S the cosine/sine Fresnel integrals,
    evaluated by adaptive quadrature; the beta -> 0 limit is 1."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0.0:
        return 1.0 + 0.0j
    c, _ = integrate.quad(lambda t: np.cos(np.pi * t**2 / 2.0), 0.0, beta,
                          epsabs=1e-10, limit=200)
    s, _ = integrate.quad(lambda t: np.sin(np.pi * t**2 / 2.0), 0.0, beta,
                          epsabs=1e-10, limit=200)
    return complex(c, s) / beta


def fresnel_G_magnitude_grid(betas: np.ndarray) -> np.ndarray:
    """Vectorized |G| on a grid (series-based Fresnel evaluation; agrees with
    the quadrature path to ~1e-12, see tests)."""
    from scipy import special

    betas = np.asarray(betas, dtype=float)
    s, c = special.fresnel(betas)
    mags = np.ones_like(betas)
    nz = betas > 0
    mags[nz] = np.hypot(c[nz], s[nz]) / betas[nz]
    return mags


def fixed_range_beta(
    n_antennas: int, spacing_m: float, wavelength_m: float, theta: float, r_i: float, r_j: float
) -> float:
    """Chirp parameter sqrt(N^2 d^2 (1-theta^2)/(2 lambda) * |1/r_i - 1/r_j|)."""
    return float(
        np.sqrt(
            n_antennas**2
            * spacing_m**2
            * (1.0 - theta**2)
            / (2.0 * wavelength_m)
            * abs(1.0 / r_i - 1.0 / r_j)
        )
    )


def correlation_fixed_range_approx(
    layout: ArrayLayout, theta: float, r_i: float, r_j: float
) -> float:
    """Same-angle correlation of the uniform layout via |G(beta)|."""
    if not is_uniform(layout):
        raise ValueError("fixed-range approximation applies to the uniform layout only")
    beta = fixed_range_beta(
        layout.num_antennas, layout.spacing_m, layout.wavelength_m, theta, r_i, r_j
    )
    return float(abs(fresnel_G(beta)))


def beam_gain(layout: ArrayLayout, beam_theta: float, target: PolarLocation) -> float:
    """Normalized gain |a^H(target) w(beam_theta)| of a far-field beam on a
    (possibly near-field) target."""
    a = steering_vector(layout, target)
    w = far_field_steering(layout, beam_theta)
    return float(abs(np.vdot(a, w)))


def beam_gain_profile(
    layout: ArrayLayout, target: PolarLocation, thetas: np.ndarray
) -> np.ndarray:
    """beam_gain over a grid of beam angles (one matrix product)."""
    pos = antenna_positions(layout)
    a = steering_vector(layout, target)
    # rows: beams; columns: antennas
    phases = (2.0 * np.pi / layout.wavelength_m) * np.outer(np.asarray(thetas), pos)
    w = np.exp(-1j * phases) / np.sqrt(layout.num_antennas)
    return np.abs(w @ np.conj(a))


def energy_spread_support(
    layout: ArrayLayout,
    source: PolarLocation,
    mu_db: float = 10.0,
    grid_step: float = 1e-4,
) -> AngularSupport:
    """Smallest angle interval covering every grid point whose far-field-beam
    gain on ``source`` exceeds 10**(-mu_db/10) of the peak gain.

    The mu-dB set can fragment into several islands; the count is reported
    but a single covering interval is returned.
    """
    if grid_step <= 0:
        raise ValueError("grid step must be positive")
    thetas = np.arange(-1.0, 1.0 + grid_step / 2.0, grid_step)
    gains = beam_gain_profile(layout, source, thetas)
    peak_idx = int(np.argmax(gains))
    peak = float(gains[peak_idx])
    iota = 10.0 ** (-mu_db / 10.0)
    above = gains > iota * peak
    idx = np.flatnonzero(above)
    if idx.size == 0:  # mu = 0 can leave only the peak itself (> is strict)
        idx = np.array([peak_idx])
    fragments = 1 + int(np.sum(np.diff(idx) > 1))
    return AngularSupport(
        theta_lo=float(thetas[idx[0]]),
        theta_hi=float(thetas[idx[-1]]),
        mu_db=mu_db,
        grid_step=grid_step,
        peak_theta=float(thetas[peak_idx]),
        peak_gain=peak,
        fragment_count=fragments,
    )
