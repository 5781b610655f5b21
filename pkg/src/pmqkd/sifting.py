"""Encoding, detector classification and "flip and flip" key reconciliation.

Everything here is exact and noise free. Key symbols are plain ints in
``range(n)``, detector labels are ints in ``range(n)``, and a phase offset
class ``s`` is the multiple of ``2*pi/n`` separating the announced random
phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

TWO_PI = 2.0 * math.pi
DEFAULT_TOL = 1e-9


class NotOnLattice(ValueError):
    """A phase is not within tolerance of any multiple of 2*pi/n."""


@dataclass(frozen=True)
class PhaseSample:
    radians: float
    slice: int

    @classmethod
    def from_radians(cls, phi: float, M: int) -> "PhaseSample":
        r = wrap(phi)
        return cls(r, slice_index(r, M))


@dataclass(frozen=True)
class SiftOutcome:
    detector: int
    kappa_b_prime: int
    kappa_b_double_prime: int
    accepted: bool = True


@dataclass(frozen=True)
class TableRow:
    kappa_a: int
    kappa_b: int
    phase_offset: float
    delta_phi: float
    detector: int
    kappa_b_prime: int
    kappa_b_double_prime: int


def _check_symbol(value: int, n: int, name: str) -> None:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0 <= value < n:
        raise ValueError(f"{name} must lie in [0, {n}), got {value}")


def wrap(theta: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    r = theta % TWO_PI
    # x % 2pi can round up to exactly 2pi for tiny negative x
    return 0.0 if r >= TWO_PI else r


def total_phase(kappa: int, phi: float, n: int) -> float:
    """Phase of the prepared coherent state, ``phi + 2*pi*kappa/n`` mod 2*pi."""
    _check_symbol(kappa, n, "kappa")
    return wrap(phi + TWO_PI * kappa / n)


def phase_delta(theta_a: float, theta_b: float) -> float:
    # signed modular difference, never the absolute value
    return wrap(theta_a - theta_b)


def _circular_distance(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def ideal_detector(delta: float, n: int, tol: float = DEFAULT_TOL) -> int:
    """Index of the detector that fires for phase difference ``delta``.

    Raises NotOnLattice when ``delta`` is farther than ``tol`` (circularly)
    from every multiple of ``2*pi/n``.
    """
    k = round(wrap(delta) * n / TWO_PI) % n
    if _circular_distance(delta, TWO_PI * k / n) > tol:
        raise NotOnLattice(f"delta={delta!r} is not within {tol} of a multiple of 2pi/{n}")
    return k


def flip_by_detector(kappa_b: int, d: int, n: int) -> int:
    _check_symbol(kappa_b, n, "kappa_b")
    _check_symbol(d, n, "detector")
    return (kappa_b + d) % n


def flip_by_phase(kappa_b_prime: int, s: int, n: int) -> int:
    _check_symbol(kappa_b_prime, n, "kappa_b_prime")
    _check_symbol(s, n, "s")
    return (kappa_b_prime - s) % n


def double_flip(kappa_b: int, d: int, s: int, n: int) -> tuple[int, int]:
    kp = flip_by_detector(kappa_b, d, n)
    return kp, flip_by_phase(kp, s, n)


def sift_round(
    kappa_a: int,
    kappa_b: int,
    phi_a: float,
    phi_b: float,
    n: int,
    tol: float = DEFAULT_TOL,
) -> SiftOutcome:
    """Run one ideal round end to end: encode, interfere, classify, double flip.

    ``phi_a`` and ``phi_b`` are radians (or PhaseSample) and must differ by a
    multiple of ``2*pi/n``.
    """
    phi_a = getattr(phi_a, "radians", phi_a)
    phi_b = getattr(phi_b, "radians", phi_b)
    s = ideal_detector(phase_delta(phi_a, phi_b), n, tol)
    delta = phase_delta(total_phase(kappa_a, phi_a, n), total_phase(kappa_b, phi_b, n))
    d = ideal_detector(delta, n, tol)
    kp, kpp = double_flip(kappa_b, d, s, n)
    return SiftOutcome(d, kp, kpp, True)


def slice_index(phi: float, M: int) -> int:
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    return min(int(math.floor(wrap(phi) * M / TWO_PI)), M - 1)


def _nearest_multiple(d: int, M: int, n: int) -> tuple[int, Fraction]:
    # nearest k with k*M/n closest to d; offset d - k*M/n kept exact
    k = (2 * d * n + M) // (2 * M)
    return k, Fraction(d * n - k * M, n)


def slice_match(m_a: int, m_b: int, M: int, n: int) -> tuple[bool, int, float]:
    """Compare announced slice indices.

    Returns ``(accepted, s, residual_slices)``: the slice difference is
    snapped to the nearest multiple of ``M/n`` and accepted when it lies within
    half a slice of it.
    """
    if not (0 <= m_a < M and 0 <= m_b < M):
        raise ValueError(f"slice indices must lie in [0, {M})")
    d = (m_a - m_b) % M
    k, off = _nearest_multiple(d, M, n)
    return abs(off) <= Fraction(1, 2), k % n, float(abs(off))


def accepted_offsets(M: int, n: int) -> list[tuple[int, int, float]]:
    """All accepted slice differences as ``(d, s, signed_residual_slices)``."""
    out = []
    for d in range(M):
        k, off = _nearest_multiple(d, M, n)
        if abs(off) <= Fraction(1, 2):
            out.append((d, k % n, float(off)))
    return out


def correspondence_table(n: int, s: int) -> list[TableRow]:
    """Enumerate all n*n key pairs for phase offset class ``s``.

    Phases are chosen as ``phi_a = 2*pi*s/n`` and ``phi_b = 0`` and pushed
    through the same pipeline as :func:`sift_round`.
    """
    _check_symbol(s, n, "s")
    phi_a, phi_b = TWO_PI * s / n, 0.0
    rows = []
    for ka in range(n):
        for kb in range(n):
            out = sift_round(ka, kb, phi_a, phi_b, n)
            delta = phase_delta(total_phase(ka, phi_a, n), total_phase(kb, phi_b, n))
            # snap to the exact lattice value for display
            delta = TWO_PI * ideal_detector(delta, n) / n
            rows.append(
                TableRow(ka, kb, phi_a, delta, out.detector, out.kappa_b_prime,
                         out.kappa_b_double_prime)
            )
    return rows


def format_phase(theta: float, n: int) -> str:
    """Render a lattice phase ``2*pi*k/n`` as e.g. ``0``, ``π``, ``4π/3``."""
    k = round(wrap(theta) * n / TWO_PI) % n
    frac = Fraction(2 * k, n)
    if frac == 0:
        return "0"
    num = "" if frac.numerator == 1 else str(frac.numerator)
    return f"{num}π" if frac.denominator == 1 else f"{num}π/{frac.denominator}"
