"""Warden-side detection model (noise uncertainty, optimal threshold,
detection error probability) and the analytic covert-transmission regions in
angle and range."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    AngularSupport,
    ChannelVector,
    PolarLocation,
    beam_gain_profile,
    fresnel_G_magnitude_grid,
)
from .geometry import ArrayLayout


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class CovertnessSpec:
    """Warden noise model and covertness requirement.

    ``rho`` is the bounded multiplicative noise-power uncertainty (>= 1, the
    noise power is log-uniform over [noise/rho, rho*noise]); ``varsigma``
    sets the detection-error-probability requirement epsilon = 1 - varsigma.
    """

    nominal_noise_w: float
    rho: float
    varsigma: float

    def __post_init__(self) -> None:
        if self.nominal_noise_w <= 0:
            raise ValueError("nominal noise power must be positive")
        if self.rho < 1.0:
            raise ValueError("uncertainty level rho must be >= 1")
        if not 0.0 <= self.varsigma <= 1.0:
            raise ValueError("varsigma must lie in [0, 1]")

    @property
    def epsilon(self) -> float:
        return 1.0 - self.varsigma

    @property
    def zero_dep_power_w(self) -> float:
        """Received power at which the warden's best DEP hits zero."""
        return self.nominal_noise_w * (self.rho - 1.0 / self.rho)


@dataclass(frozen=True)
class CovertRegion:
    """Complement of the open excluded band (excluded_lo, excluded_hi).

    ``kind`` is "angle" (band in theta) or "range" (band in meters, where
    excluded_hi may be inf).  ``threshold`` is the correlation/gain level
    that defines the band.
    """

    kind: str
    excluded_lo: float
    excluded_hi: float
    threshold: float

    def __post_init__(self) -> None:
        if self.excluded_lo > self.excluded_hi:
            raise ValueError("excluded band is inverted")

    def allows(self, x: float) -> bool:
        return not (self.excluded_lo < x < self.excluded_hi)

    def to_row(self, **params):
        row = {"kind": self.kind, "lo": self.excluded_lo, "hi": self.excluded_hi,
               "delta": self.threshold}
        row.update(params)
        return row


def covert_power_threshold(spec: CovertnessSpec) -> float:
    """Largest warden-received signal power compatible with the DEP
    requirement: noise*(rho^(2*varsigma) - 1)/rho."""
    return spec.nominal_noise_w * (spec.rho ** (2.0 * spec.varsigma) - 1.0) / spec.rho


def received_covert_power(willie_channel: ChannelVector, beamformer) -> float:
    """sum_b |h_W^H F_A f_b|^2 for one warden."""
    h = willie_channel.coefficients
    effective = beamformer.analog.conj().T @ h  # length B
    if beamformer.digital.shape[0] != effective.shape[0]:
        raise ValueError("beamformer/channel dimension mismatch")
    return float(np.sum(np.abs(effective.conj() @ beamformer.digital) ** 2))


def optimal_threshold(f_co: float, spec: CovertnessSpec) -> float:
    """Energy-detection threshold minimizing the warden's DEP:
    min(f_co + noise/rho, rho*noise)."""
    if f_co < 0:
        raise ValueError("received signal power must be nonnegative")
    return min(f_co + spec.nominal_noise_w / spec.rho, spec.rho * spec.nominal_noise_w)


def min_dep(f_co: float, spec: CovertnessSpec) -> float:
    """Warden's minimum detection error probability at the optimal threshold."""
    if f_co < 0:
        raise ValueError("received signal power must be nonnegative")
    if spec.rho == 1.0:
        raise ValueError("rho = 1 leaves no noise uncertainty; DEP model undefined")
    if f_co >= spec.zero_dep_power_w:
        return 0.0
    value = 1.0 - np.log1p(spec.rho * f_co / spec.nominal_noise_w) / (2.0 * np.log(spec.rho))
    return float(min(1.0, max(0.0, value)))


def dep_monte_carlo(f_co: float, spec: CovertnessSpec, trials: int, seed: int) -> float:
    """Monte-Carlo DEP estimate at the optimal threshold.

    Noise powers are drawn exactly log-uniform (inverse CDF: noise *
    rho^(2U-1)); the estimate is the false-alarm fraction plus the
    miss-detection fraction.  Deterministic given ``seed``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, 0x0DE9)))
    u = rng.uniform(0.0, 1.0, size=trials)
    noise = spec.nominal_noise_w * spec.rho ** (2.0 * u - 1.0)
    tau = optimal_threshold(f_co, spec)
    false_alarm = np.mean(noise >= tau)
    miss = np.mean(f_co + noise <= tau)
    return float(false_alarm + miss)


def lemma2_margin(
    chis, powers, willie_gain: float, n_antennas: int, spec: CovertnessSpec
) -> tuple[bool, float, float]:
    """LoS-only covert condition: sum_b P_b chi_b^2 <= Gamma_W(eps).

    Returns (pass, lhs, rhs) with rhs = noise*(rho^(2*varsigma)-1) / (rho*N*g_W^2).
    """
    lhs = float(np.sum(np.asarray(powers) * np.asarray(chis) ** 2))
    rhs = covert_power_threshold(spec) / (n_antennas * willie_gain**2)
    return lhs <= rhs, lhs, rhs


def delta_far_bob(spec: CovertnessSpec, power_far_w: float, willie_gain: float,
                  n_antennas: int) -> float:
    """Correlation cap sqrt(Gamma_W/P) for the far-field user (single leaker)."""
    gamma = covert_power_threshold(spec) / (n_antennas * willie_gain**2)
    return float(np.sqrt(gamma / power_far_w))


def delta_near_bob(spec: CovertnessSpec, power_near_w: float, willie_gain: float,
                   n_antennas: int) -> float:
    """Correlation cap sqrt(Gamma_W/P) for the near-field user (single leaker)."""
    return delta_far_bob(spec, power_near_w, willie_gain, n_antennas)


def delta_far_bob_both_leak(
    spec: CovertnessSpec,
    power_near_w: float,
    power_far_w: float,
    chi_willie_near: float,
    willie_gain: float,
    n_antennas: int,
) -> float:
    """Far-user correlation cap when the near user also leaks:
    sqrt((Gamma_W - P_1 chi^2)/P_2), clamped at 0 when nothing is left."""
    gamma = covert_power_threshold(spec) / (n_antennas * willie_gain**2)
    residual = gamma - power_near_w * chi_willie_near**2
    if residual <= 0.0:
        return 0.0
    return float(np.sqrt(residual / power_far_w))


def covert_angle_region(
    willie: PolarLocation,
    delta: float,
    layout: ArrayLayout,
    grid_step: float = 1e-4,
) -> CovertRegion:
    """Angle band a far-field user must avoid so its beam leaks at most
    ``delta`` onto the warden.

    The beam-gain profile toward the warden is scanned on a theta grid; the
    excluded band spans from just before the first grid point above delta to
    just after the last one (the smallest and largest level crossings).  If
    the gain never exceeds delta, the excluded band is empty (degenerate at
    the peak).
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    thetas = np.arange(-1.0, 1.0 + grid_step / 2.0, grid_step)
    gains = beam_gain_profile(layout, willie, thetas)
    above = np.flatnonzero(gains > delta)
    if above.size == 0:
        peak = float(thetas[int(np.argmax(gains))])
        return CovertRegion("angle", peak, peak, delta)
    left = thetas[above[0] - 1] if above[0] > 0 else -1.0
    right = thetas[above[-1] + 1] if above[-1] + 1 < thetas.size else 1.0
    return CovertRegion("angle", float(left), float(right), delta)


_ENVELOPE_CACHE: dict[tuple[float, float], tuple[np.ndarray, np.ndarray]] = {}


def _fresnel_envelope(beta_max: float, step: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Right-to-left running maximum of |G| on a dense beta grid."""
    key = (beta_max, step)
    if key not in _ENVELOPE_CACHE:
        betas = np.arange(0.0, beta_max + step, step)
        mags = fresnel_G_magnitude_grid(betas)
        envelope = np.maximum.accumulate(mags[::-1])[::-1]
        _ENVELOPE_CACHE[key] = (betas, envelope)
    return _ENVELOPE_CACHE[key]


def invert_fresnel_envelope(delta: float, step: float = 1e-3) -> float:
    """Smallest beta where the decreasing envelope of |G| falls to ``delta``.

    |G| decays with minor ripples, so the inversion runs on its running
    maximum from the right rather than on |G| itself.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    beta_max = max(10.0, 1.5 / delta)
    for _ in range(6):  # |G| ~ 0.71/beta, so one pass suffices in practice
        betas, envelope = _fresnel_envelope(beta_max, step)
        idx = np.flatnonzero(envelope <= delta)
        if idx.size:
            return float(betas[idx[0]])
        beta_max *= 2.0
    raise RuntimeError(f"envelope of |G| never fell to {delta} below beta={beta_max}")


def covert_range_region(
    willie: PolarLocation,
    delta1: float,
    n_antennas: int,
    spacing_m: float,
    wavelength_m: float,
) -> CovertRegion:
    """Range band a same-angle near-field user must avoid.

    With Pi = 2*lambda*beta_delta^2 / (N^2 d^2 (1 - theta_W^2)), covert
    ranges are r <= r_W/(1 + Pi r_W) or r >= r_W/(1 - Pi r_W); the far
    branch disappears when Pi*r_W >= 1.
    """
    if willie.theta**2 >= 1.0:
        raise ValueError("endfire warden (theta^2 = 1) has no range region")
    beta_delta = invert_fresnel_envelope(delta1)
    pi_factor = (
        2.0 * wavelength_m * beta_delta**2
        / (n_antennas**2 * spacing_m**2 * (1.0 - willie.theta**2))
    )
    r_w = willie.range_m
    lo = r_w / (1.0 + pi_factor * r_w)
    hi = r_w / (1.0 - pi_factor * r_w) if pi_factor * r_w < 1.0 else float("inf")
    return CovertRegion("range", float(lo), float(hi), delta1)


def classify_case(
    bob_near: PolarLocation,
    bob_far: PolarLocation,
    willie: PolarLocation,
    support: AngularSupport,
    n_antennas: int,
) -> int:
    """Which of the four leakage patterns applies.

    Case 1: neither user correlated with the warden; 2: far user leaks
    (inside the warden's energy-spread support); 3: near user leaks (same
    angle as the warden); 4: both leak.  Angle equality is taken within half
    a beamwidth, 1/(2N).
    """
    same_angle = abs(bob_near.theta - willie.theta) < 1.0 / (2.0 * n_antennas)
    in_support = support.contains(bob_far.theta)
    if not same_angle and not in_support:
        return 1
    if not same_angle and in_support:
        return 2
    if same_angle and not in_support:
        return 3
    return 4
