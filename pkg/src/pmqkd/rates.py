"""Key-rate formulas and the closed-form observables model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .photonics import (
    ProtocolParams,
    arm_transmittance,
    click_probabilities,
    port_intensities,
    single_click_probabilities,
)
from .sifting import TWO_PI, accepted_offsets

DEFAULT_MU_GRID = np.logspace(-4, 0, 40)

# Gauss-Legendre nodes for the triangular within-slice residual, split at 0
_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)


class DomainError(ValueError):
    pass


class ModelUnavailable(ValueError):
    """Unknown phase-error estimation model."""


@dataclass(frozen=True)
class Observables:
    q: float
    ez: float
    ex: float


@dataclass
class RateReport:
    L: float
    mu_used: float
    rate_trits: float
    rate_bits: float
    rate_2pm_bits: float
    plob_bits: float
    observables: Observables
    mc: object = None  # TallySummary when a Monte Carlo run backs this row


def entropy(x: float, base: int = 2) -> float:
    """Two-outcome Shannon entropy with logarithm in ``base``."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return (-x * math.log(x) - (1.0 - x) * math.log1p(-x)) / math.log(base)


def rate_shor_preskill(ez: float, ex: float) -> float:
    return max(0.0, 1.0 - entropy(ez, 2) - entropy(ex, 2))


def rate_pm(n: int, M: int, obs: Observables, f: float) -> float:
    """Phase-matching key rate ``(n/M) * Q * [1 - f*H_n(Ez) - H_n(Ex)]``.

    Units are base-``n`` symbols per pulse (trits for n=3). Negative brackets
    clamp to zero.
    """
    bracket = 1.0 - f * entropy(obs.ez, n) - entropy(obs.ex, n)
    return n / M * obs.q * max(0.0, bracket)


def plob_bound(eta_total: float) -> float:
    if not 0.0 <= eta_total < 1.0:
        raise DomainError(f"transmittance must lie in [0, 1), got {eta_total}")
    return -math.log2(1.0 - eta_total)


def channel_transmittance(L: float, alpha: float) -> float:
    """End-to-end fiber transmittance over ``L`` km, no detectors."""
    return 10.0 ** (-alpha * L / 10.0)


def slice_penalty(M: float) -> float:
    """``1 - <cos d>`` for d uniform on [-pi/M, pi/M], i.e. ``1 - sinc(pi/M)``."""
    if math.isinf(M):
        return 0.0
    x = math.pi / M
    return 1.0 - math.sin(x) / x


def phase_error_rate(ez: float, params: ProtocolParams, model: str | None = None,
                     value: float | None = None) -> float:
    """Phase-basis error rate under the selected estimation model.

    ``"slice"`` adds the slice-discretisation penalty to ``ez``;
    ``"constant"`` returns ``value`` (default ``params.ex_value``).
    """
    model = params.ex_model if model is None else model
    if model == "slice":
        return min(1.0, ez + slice_penalty(params.M))
    if model == "constant":
        return params.ex_value if value is None else value
    raise ModelUnavailable(f"unknown phase-error model {model!r}")


def _residual_nodes(M: int, n: int):
    """Signed residual phases of accepted rounds and their probability weights."""
    offs = np.array([r for _, _, r in accepted_offsets(M, n)])
    t = np.concatenate([(_GL_X - 1) / 2, (_GL_X + 1) / 2])
    w = np.concatenate([_GL_W / 2, _GL_W / 2]) * (1 - np.abs(t))
    delta = TWO_PI / M * (offs[:, None] + t[None, :])
    weights = np.broadcast_to(w / len(offs), delta.shape)
    return delta.ravel(), weights.ravel()


def analytic_observables(params: ProtocolParams) -> Observables:
    """Gain and trit error rate of slice-accepted rounds, in closed form.

    Averages the exact single-click probabilities over the accepted slice
    differences and the triangular within-slice residual. Port 0 is taken as
    the correct port; by shift symmetry this covers every key pair.
    """
    n = params.n
    eta = arm_transmittance(params)
    delta, w = _residual_nodes(params.M, n)
    ports = port_intensities(eta * params.mu_a, eta * params.mu_b, delta, n,
                             params.interferometer)
    only = single_click_probabilities(click_probabilities(ports, params.p_d))
    e_d = params.e_d
    q = float(w @ only.sum(axis=-1))
    err = float(w @ (only[:, 0] * e_d + only[:, 1:].sum(axis=-1) * (1 - e_d / (n - 1))))
    ez = err / q if q > 0 else 0.0
    ez = min(max(ez, 0.0), 1.0)
    return Observables(q, ez, phase_error_rate(ez, params))


def optimize_intensity(params: ProtocolParams, mu_grid=None) -> tuple[float, float]:
    """Best ``mu`` (both parties equal) over a grid; ties go to the smaller mu."""
    grid = np.sort(np.asarray(DEFAULT_MU_GRID if mu_grid is None else mu_grid, dtype=float))
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("mu grid must be nonempty and positive")
    best_mu, best_rate = float(grid[0]), -1.0
    for mu in grid:
        p = params.with_mu(float(mu))
        r = rate_pm(p.n, p.M, analytic_observables(p), p.f)
        if r > best_rate:
            best_mu, best_rate = float(mu), r
    return best_mu, best_rate


def rate_report(params: ProtocolParams, optimize: bool = True, fixed_mu: float | None = None,
                mu_grid=None) -> RateReport:
    """Rate comparison at ``params.L``: n-PM, 2-PM and the repeaterless bound."""
    if optimize and fixed_mu is None:
        mu, _ = optimize_intensity(params, mu_grid)
        mu2, _ = optimize_intensity(params.replace(n=2), mu_grid)
    else:
        mu = mu2 = params.mu_a if fixed_mu is None else fixed_mu
    p = params.with_mu(mu)
    obs = analytic_observables(p)
    rate = rate_pm(p.n, p.M, obs, p.f)
    p2 = params.replace(n=2).with_mu(mu2)
    rate2 = rate_pm(2, p2.M, analytic_observables(p2), p2.f)
    eta = channel_transmittance(params.L, params.alpha)
    plob = plob_bound(eta) if eta < 1.0 else math.inf
    return RateReport(params.L, mu, rate, rate * math.log2(p.n), rate2, plob, obs)
