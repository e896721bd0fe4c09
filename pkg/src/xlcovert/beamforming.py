"""Two-stage hybrid beamforming.

Stage 1 points one unit-modulus analog beam at each served user's dominant
path; stage 2 optimizes the digital matrix for weighted sum-rate under the
total-power and warden-received-power constraints by successive convex
approximation, each convex subproblem being a small centered QCQP solved
through its Lagrangian dual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .channel import ChannelVector, PolarLocation, steering_vector
from .covertness import CovertnessSpec, covert_power_threshold
from .geometry import ArrayLayout

LN2 = float(np.log(2.0))


class SolverError(RuntimeError):
    """Digital-beamforming subproblem failed to produce a certified point."""


@dataclass(frozen=True)
class HybridBeamformer:
    """Unit-modulus analog matrix (N x B), digital matrix (B x B), and the
    total power budget ||analog @ digital||_F^2 must respect."""

    analog: np.ndarray
    digital: np.ndarray
    power_budget_w: float

    def __post_init__(self) -> None:
        analog = np.asarray(self.analog, dtype=complex)
        digital = np.asarray(self.digital, dtype=complex)
        if analog.ndim != 2 or digital.ndim != 2:
            raise ValueError("beamforming matrices must be 2-D")
        if analog.shape[1] != digital.shape[0] or digital.shape[0] != digital.shape[1]:
            raise ValueError("analog is N x B and digital is B x B")
        if not np.allclose(np.abs(analog), 1.0, atol=1e-9):
            raise ValueError("analog entries must be unit modulus")
        used = float(np.linalg.norm(analog @ digital) ** 2)
        if used > self.power_budget_w * (1.0 + 1e-6):
            raise ValueError(f"power {used} exceeds budget {self.power_budget_w}")
        object.__setattr__(self, "analog", analog)
        object.__setattr__(self, "digital", digital)

    @property
    def transmit_power_w(self) -> float:
        return float(np.linalg.norm(self.analog @ self.digital) ** 2)


@dataclass(frozen=True)
class RateReport:
    per_bob_rate: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def weighted_sum(self) -> float:
        return float(np.dot(self.per_bob_rate, self.weights))

    @property
    def sum_rate(self) -> float:
        return float(np.sum(self.per_bob_rate))


@dataclass(frozen=True)
class SCAConfig:
    max_iters: int = 50
    objective_tol: float = 1e-4
    subproblem_tol: float = 1e-10
    init_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.objective_tol <= 0 or self.subproblem_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not 0.0 < self.init_scale <= 1.0:
            raise ValueError("init_scale must lie in (0, 1]")


@dataclass(frozen=True)
class SCAIterate:
    iteration: int
    surrogate: float
    true_rate: float
    max_violation: float


@dataclass(frozen=True)
class SCAResult:
    digital: np.ndarray
    report: RateReport
    trace: tuple[SCAIterate, ...] = field(default=())
    converged: bool = False


def analog_mrt(layout: ArrayLayout, bob_locs: list[PolarLocation]) -> np.ndarray:
    """Per-user matched analog beams: column b is sqrt(N) * a(theta_b, r_b)."""
    if not bob_locs:
        raise ValueError("need at least one served user")
    cols = [np.sqrt(layout.num_antennas) * steering_vector(layout, loc) for loc in bob_locs]
    return np.column_stack(cols)


def effective_channels(analog: np.ndarray, channels: list[ChannelVector]) -> list[np.ndarray]:
    """Digital-domain channels e = F_A^H h for each receiver."""
    analog = np.asarray(analog)
    out = []
    for ch in channels:
        h = ch.coefficients
        if h.shape[0] != analog.shape[0]:
            raise ValueError("channel length does not match the analog matrix")
        out.append(analog.conj().T @ h)
    return out


def _rate_terms(effective_bobs, digital, noise_w):
    e_mat = np.column_stack(effective_bobs)  # column b = e_b
    z = e_mat.conj().T @ digital  # z[b, i] = e_b^H f_i
    signal = np.abs(np.diag(z)) ** 2
    interference = np.sum(np.abs(z) ** 2, axis=1) - signal
    return z, signal, interference + noise_w


def achievable_rate(
    effective_bobs: list[np.ndarray],
    digital: np.ndarray,
    noise_w: float,
    weights,
) -> RateReport:
    """Per-user rates log2(1 + |e_b^H f_b|^2 / (sum_{i!=b} |e_b^H f_i|^2 + noise))."""
    _, signal, denom = _rate_terms(effective_bobs, digital, noise_w)
    rates = np.log2(1.0 + signal / denom)
    return RateReport(per_bob_rate=tuple(float(r) for r in rates), weights=tuple(weights))


def sca_surrogate(
    effective_bobs: list[np.ndarray],
    digital_prev: np.ndarray,
    digital_var: np.ndarray,
    noise_w: float,
) -> np.ndarray:
    """Concave per-user lower bound on the rate, tight at digital_prev.

    Built from the previous iterate's signal/interference split: the log term
    is frozen, the signal term linearized, and the total received power
    penalized with the frozen curvature.
    """
    z_k, sig_k, den_k = _rate_terms(effective_bobs, digital_prev, noise_w)
    z, sig, den = _rate_terms(effective_bobs, digital_var, noise_w)
    zeta_k = np.diag(z_k)
    zeta = np.diag(z)
    gamma_k = sig_k / den_k
    cross = 2.0 * np.real(np.conj(zeta_k) * zeta) / den_k
    curvature = sig_k * (sig + den) / (den_k * (sig_k + den_k))
    return (np.log1p(gamma_k) - gamma_k + cross - curvature) / LN2


def _null_space(rows: list[np.ndarray], dim: int) -> np.ndarray:
    """Orthonormal basis of the joint null space of the given row vectors."""
    if not rows:
        return np.eye(dim, dtype=complex)
    a = np.vstack([r.conj()[None, :] for r in rows])
    _, s, vh = np.linalg.svd(a)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 1.0)))
    return vh[rank:].conj().T


def _radial_scale(f_mat: np.ndarray, mats, caps) -> np.ndarray:
    """Shrink toward the origin until every quadratic cap holds exactly."""
    s = 1.0
    for a, c in zip(mats, caps):
        q = float(np.real(np.sum(np.conj(f_mat) * (a @ f_mat))))
        if q > c:
            s = min(s, np.sqrt(c / q) if q > 0 else 0.0)
    return f_mat * s


def _solve_centered_qcqp(beta, q_mat, mats, caps, mu0, gtol):
    """maximize sum_i 2Re{beta_i^H f_i} - f_i^H Q f_i  over the intersection
    of centered ellipsoids sum_i f_i^H A_j f_i <= c_j.

    The dual over the J multipliers is convex and has a closed-form inner
    maximizer F(mu) = (Q + sum mu_j A_j)^-1 B, so it is minimized directly
    (L-BFGS-B); zero is strictly feasible, which certifies strong duality.
    """
    dim = beta.shape[0]
    scale = max(float(np.linalg.norm(beta)), float(np.linalg.norm(q_mat)), 1e-300)
    b_s = beta / scale
    q_s = q_mat / scale
    a_tilde = [a / c for a, c in zip(mats, caps)]
    ridge = (1e-12 * max(1.0, float(np.linalg.norm(q_s)))) * np.eye(dim)

    def assemble(mu):
        m = q_s + ridge
        for mu_j, a in zip(mu, a_tilde):
            m = m + mu_j * a
        return m

    def dual(mu):
        m = assemble(mu)
        try:
            f = np.linalg.solve(m, b_s)
        except np.linalg.LinAlgError:
            return np.inf, np.full(len(mu), -np.inf)
        val = float(np.real(np.sum(np.conj(b_s) * f))) + float(np.sum(mu))
        grad = np.array(
            [1.0 - float(np.real(np.sum(np.conj(f) * (a @ f)))) for a in a_tilde]
        )
        return val, grad

    if mats:
        res = optimize.minimize(
            dual,
            x0=np.maximum(mu0, 0.0),
            jac=True,
            bounds=[(0.0, None)] * len(mats),
            method="L-BFGS-B",
            options={"maxiter": 300, "ftol": 1e-14, "gtol": gtol},
        )
        mu = np.maximum(res.x, 0.0)
    else:
        mu = np.zeros(0)
    f_mat = np.linalg.solve(assemble(mu), b_s)
    if not np.all(np.isfinite(f_mat)):
        raise SolverError("subproblem produced non-finite beams")
    return _radial_scale(f_mat, mats, caps), mu


def initial_digital(
    effective_bobs: list[np.ndarray],
    analog_gram: np.ndarray,
    power_w: float,
    covert_mats,
    covert_caps,
) -> np.ndarray:
    """Equal-power matched beams in digital space, backed off (and, for
    zero-cap wardens, projected onto their null space) until every
    covertness cap holds."""
    b = len(effective_bobs)
    zero_rows = [m for m, c in zip(covert_mats, covert_caps) if c <= 0.0]
    cols = []
    for e in effective_bobs:
        f = e / max(np.linalg.norm(e), 1e-300)
        cols.append(f)
    f_mat = np.column_stack(cols)
    if zero_rows:
        basis = _null_space([m["row"] for m in zero_rows], b)
        f_mat = basis @ (basis.conj().T @ f_mat)
    # per-beam power P/B measured through the analog front end
    for i in range(b):
        p_i = float(np.real(f_mat[:, i].conj() @ analog_gram @ f_mat[:, i]))
        f_mat[:, i] *= np.sqrt(power_w / b / p_i) if p_i > 0 else 0.0
    pos_mats = [m["mat"] for m, c in zip(covert_mats, covert_caps) if c > 0.0]
    pos_caps = [c for c in covert_caps if c > 0.0]
    return _radial_scale(f_mat, pos_mats, pos_caps)


def solve_digital_sca(
    effective_bobs: list[np.ndarray],
    effective_willies: list[np.ndarray],
    spec: CovertnessSpec | None,
    power_w: float,
    weights,
    config: SCAConfig,
    *,
    analog_gram: np.ndarray,
    noise_b_w: float,
) -> SCAResult:
    """Covertness-constrained digital beamforming by SCA.

    Every iteration maximizes the concave surrogate exactly (dual of the
    centered QCQP), keeps the previous iterate whenever the fresh point does
    not improve its own surrogate, and stops when the surrogate objective
    stalls; the surrogate sequence is therefore non-decreasing and every
    iterate satisfies the power and covertness caps.
    """
    b = len(effective_bobs)
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (b,):
        raise ValueError("need one weight per served user")
    gamma = covert_power_threshold(spec) if spec is not None else None

    covert_entries = []
    if gamma is not None:
        for e_w in effective_willies:
            covert_entries.append({"row": e_w, "mat": np.outer(e_w, e_w.conj())})
    covert_caps = [gamma] * len(covert_entries)

    zero_rows = [m["row"] for m, c in zip(covert_entries, covert_caps) if c <= 0.0]
    basis = _null_space(zero_rows, b) if zero_rows else np.eye(b, dtype=complex)

    f_cur = initial_digital(
        effective_bobs, analog_gram, power_w, covert_entries, covert_caps
    ) * config.init_scale

    # constraint set in the (possibly reduced) coordinates
    mats_full = [analog_gram] + [m["mat"] for m, c in zip(covert_entries, covert_caps) if c > 0.0]
    caps = [power_w] + [c for c in covert_caps if c > 0.0]
    reduced = basis.shape[1] < b
    if reduced:
        mats = [basis.conj().T @ m @ basis for m in mats_full]
    else:
        mats = mats_full

    def violations(f_mat):
        worst = 0.0
        for a, c in zip(mats_full, caps):
            q = float(np.real(np.sum(np.conj(f_mat) * (a @ f_mat))))
            worst = max(worst, (q - c) / max(c, 1e-300))
        for row in zero_rows:
            worst = max(worst, float(np.sum(np.abs(row.conj() @ f_mat) ** 2)))
        return worst

    def weighted_surrogate(f_prev, f_var):
        return float(
            weights @ sca_surrogate(effective_bobs, f_prev, f_var, noise_b_w)
        )

    e_mat = np.column_stack(effective_bobs)
    trace: list[SCAIterate] = []
    mu_warm = np.ones(len(mats))
    prev_obj = None
    converged = False
    for it in range(1, config.max_iters + 1):
        z_k, sig_k, den_k = _rate_terms(effective_bobs, f_cur, noise_b_w)
        zeta_k = np.diag(z_k)
        coeff = weights * zeta_k / den_k
        curv = weights * sig_k / (den_k * (sig_k + den_k))
        beta = e_mat * coeff[None, :]
        q_mat = (e_mat * curv[None, :]) @ e_mat.conj().T
        if reduced:
            beta_r = basis.conj().T @ beta
            q_r = basis.conj().T @ q_mat @ basis
        else:
            beta_r, q_r = beta, q_mat
        x_new, mu_warm = _solve_centered_qcqp(
            beta_r, q_r, mats, caps, mu_warm, gtol=config.subproblem_tol
        )
        f_new = basis @ x_new if reduced else x_new
        if weighted_surrogate(f_cur, f_new) < weighted_surrogate(f_cur, f_cur):
            f_new = f_cur  # keep the expansion point; surrogate never decreases
        obj = weighted_surrogate(f_cur, f_new)
        report = achievable_rate(effective_bobs, f_new, noise_b_w, weights)
        trace.append(
            SCAIterate(
                iteration=it,
                surrogate=obj,
                true_rate=report.weighted_sum,
                max_violation=violations(f_new),
            )
        )
        f_cur = f_new
        if prev_obj is not None and abs(obj - prev_obj) <= config.objective_tol * max(
            1.0, abs(obj)
        ):
            converged = True
            break
        prev_obj = obj

    report = achievable_rate(effective_bobs, f_cur, noise_b_w, weights)
    return SCAResult(digital=f_cur, report=report, trace=tuple(trace), converged=converged)


@dataclass(frozen=True)
class PowerSplit:
    p_near_w: float
    p_far_w: float
    sum_rate: float
    feasible: bool


def two_user_rates(
    p1: float,
    p2: float,
    chi_b1b2: float,
    bob_gains,
    n_antennas: int,
    noise_b_w: float,
) -> tuple[float, float]:
    """Closed-form two-user rates under matched beams and power allocation."""
    g1, g2 = bob_gains
    r1 = np.log2(1.0 + p1 * n_antennas * g1**2 / (p2 * n_antennas * g1**2 * chi_b1b2**2 + noise_b_w))
    r2 = np.log2(1.0 + p2 * n_antennas * g2**2 / (p1 * n_antennas * g2**2 * chi_b1b2**2 + noise_b_w))
    return float(r1), float(r2)


def power_allocation_2user(
    chi_b1b2: float,
    chi_willie,
    bob_gains,
    willie_gain: float,
    n_antennas: int,
    power_w: float,
    noise_b_w: float,
    spec: CovertnessSpec | None,
    grid: int = 100,
) -> PowerSplit:
    """Exhaustive two-user power split maximizing the closed-form sum rate.

    Splits violating the LoS covert condition are discarded; with no
    feasible split the all-zero (silent) allocation is returned.
    """
    gamma = None
    if spec is not None:
        gamma = covert_power_threshold(spec) / (n_antennas * willie_gain**2)
    chi_w = np.asarray(chi_willie, dtype=float)
    best = PowerSplit(0.0, 0.0, 0.0, feasible=False)
    for k in range(grid + 1):
        p1 = power_w * k / grid
        p2 = power_w - p1
        if gamma is not None and p1 * chi_w[0] ** 2 + p2 * chi_w[1] ** 2 > gamma:
            continue
        r1, r2 = two_user_rates(p1, p2, chi_b1b2, bob_gains, n_antennas, noise_b_w)
        if not best.feasible or r1 + r2 > best.sum_rate:
            best = PowerSplit(p1, p2, r1 + r2, feasible=True)
    return best
