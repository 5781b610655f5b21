"""Optical layer: fiber loss, n-port interference, threshold detectors.

Two interferometer models are available through ``ProtocolParams.interferometer``:

``"tritter"`` (default)
    Both pulses enter a symmetric n-port (discrete Fourier coupler), the
    remaining inputs dark. Port ``k`` receives
    ``(I_a + I_b + 2*sqrt(I_a*I_b)*cos(dtheta - 2*pi*k/n)) / n``.
    For n=3 a matched port gets ``4I/3`` and each unmatched port ``I/3``.

``"ideal"``
    A response kernel that routes all interfering light into the matched port
    when ``dtheta`` sits on the lattice, i.e. the deterministic detector rule
    of the protocol. Off-lattice leakage follows the Fejer kernel
    ``|sum_j exp(i*j*x)|**2 / n**2``. Not realisable with two coherent pulses
    and linear optics for n > 2; kept as a diagnostic upper bound. Identical to
    ``"tritter"`` for n=2.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .sifting import TWO_PI

INTERFEROMETERS = ("tritter", "ideal")
EX_MODELS = ("slice", "constant")


class RangeError(ValueError):
    """A protocol parameter violates its allowed range."""


@dataclass(frozen=True)
class ProtocolParams:
    n: int = 3
    mu_a: float = 0.05
    mu_b: float = 0.05
    p_d: float = 8e-8
    eta_d: float = 0.145
    f: float = 1.15
    M: int = 16
    e_d: float = 0.015
    alpha: float = 0.2  # dB/km
    L: float = 0.0  # km, Alice to Bob
    interferometer: str = "tritter"
    ex_model: str = "slice"
    ex_value: float = 0.0  # used by ex_model="constant"

    def __post_init__(self):
        def need(cond, msg):
            if not cond:
                raise RangeError(msg)

        need(self.n >= 2, f"n must be >= 2, got {self.n}")
        need(self.M >= self.n, f"M must be >= n ({self.n}), got {self.M}")
        for name in ("p_d", "eta_d", "e_d", "ex_value"):
            v = getattr(self, name)
            need(0.0 <= v <= 1.0, f"{name} must lie in [0, 1], got {v}")
        need(self.mu_a >= 0 and self.mu_b >= 0, "mu_a and mu_b must be >= 0")
        need(self.f >= 1.0, f"f must be >= 1, got {self.f}")
        need(self.alpha > 0, f"alpha must be > 0, got {self.alpha}")
        need(self.L >= 0, f"L must be >= 0, got {self.L}")
        need(self.interferometer in INTERFEROMETERS,
             f"interferometer must be one of {INTERFEROMETERS}, got {self.interferometer!r}")
        need(self.ex_model in EX_MODELS,
             f"ex_model must be one of {EX_MODELS}, got {self.ex_model!r}")

    def with_mu(self, mu: float) -> "ProtocolParams":
        return replace(self, mu_a=mu, mu_b=mu)

    def at(self, L: float) -> "ProtocolParams":
        return replace(self, L=L)

    def replace(self, **changes) -> "ProtocolParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def arm_transmittance(params: ProtocolParams) -> float:
    """Transmittance of one arm (L/2 of fiber) including detector efficiency."""
    return params.eta_d * 10.0 ** (-params.alpha * (params.L / 2.0) / 10.0)


def fejer(x, n: int):
    x = np.asarray(x, dtype=float)
    j = np.arange(n)
    amp = np.exp(1j * np.multiply.outer(x, j)).sum(axis=-1)
    return np.abs(amp) ** 2 / n**2


def port_intensities(I_a: float, I_b: float, delta_theta, n: int,
                     model: str = "tritter") -> np.ndarray:
    """Mean photon number reaching each of the ``n`` detectors.

    ``delta_theta`` may be an array; the port axis is appended last.
    """
    if I_a < 0 or I_b < 0:
        raise ValueError("intensities must be nonnegative")
    x = np.subtract.outer(np.asarray(delta_theta, dtype=float), TWO_PI * np.arange(n) / n)
    total = I_a + I_b
    if model == "tritter":
        return (total + 2.0 * math.sqrt(I_a * I_b) * np.cos(x)) / n
    if model == "ideal":
        if total == 0:
            return np.zeros_like(x)
        vis = 2.0 * math.sqrt(I_a * I_b) / total
        return total * ((1.0 - vis) / n + vis * fejer(x, n))
    raise ValueError(f"unknown interferometer model {model!r}")


def click_probabilities(ports, p_d: float) -> np.ndarray:
    return 1.0 - (1.0 - p_d) * np.exp(-np.asarray(ports, dtype=float))


def single_click_probabilities(probs) -> np.ndarray:
    """P(only detector k clicks) for independent detectors, along the last axis."""
    probs = np.asarray(probs, dtype=float)
    miss = 1.0 - probs
    n = probs.shape[-1]
    out = np.empty_like(probs)
    for k in range(n):
        others = np.delete(miss, k, axis=-1).prod(axis=-1)
        out[..., k] = probs[..., k] * others
    return out


def sample_clicks(probs, rng: np.random.Generator) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    return rng.random(probs.shape) < probs


def apply_misalignment(d_true: int, e_d: float, n: int, rng: np.random.Generator) -> int:
    """With probability ``e_d`` move the click to one of the other n-1 detectors."""
    if rng.random() < e_d:
        return (d_true + int(rng.integers(1, n))) % n
    return d_true
