"""Round-by-round simulation of the protocol over the optical model.

Rounds are recorded unconditionally and sifted in a second pass. Batches are
split into fixed-size blocks, each with its own seed derived from
``(master_seed, block_index)``, so the result does not depend on how many
workers share the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .photonics import (
    ProtocolParams,
    apply_misalignment,
    arm_transmittance,
    click_probabilities,
    port_intensities,
    sample_clicks,
)
from .rates import ModelUnavailable, phase_error_rate  # noqa: F401  (re-exported)
from .sifting import (
    TWO_PI,
    PhaseSample,
    SiftOutcome,
    double_flip,
    phase_delta,
    slice_match,
    total_phase,
)

BLOCK_SIZE = 1 << 17


@dataclass
class RoundRecord:
    kappa_a: int
    kappa_b: int
    phi_a: PhaseSample
    phi_b: PhaseSample
    delta_phi: float
    clicks: np.ndarray
    success: bool
    detector: int | None = None
    sift: SiftOutcome | None = None
    slice_residual: float = math.nan


@dataclass(frozen=True)
class TallySummary:
    rounds_total: int
    rounds_matched: int
    rounds_sifted: int
    rounds_error: int
    q_hat: float
    ez_hat: float
    std_q: float
    std_ez: float
    seed: int

    @classmethod
    def from_counts(cls, total: int, matched: int, sifted: int, errors: int,
                    seed: int) -> "TallySummary":
        q = sifted / matched if matched else 0.0
        ez = errors / sifted if sifted else 0.0
        std_q = math.sqrt(q * (1 - q) / matched) if matched else 0.0
        std_ez = math.sqrt(ez * (1 - ez) / sifted) if sifted else 0.0
        return cls(total, matched, sifted, errors, q, ez, std_q, std_ez, seed)

    def to_dict(self) -> dict:
        return asdict(self)


def record_round(params: ProtocolParams, rng: np.random.Generator,
                 phi_a: float | None = None, phi_b: float | None = None) -> RoundRecord:
    """Steps 1-3: prepare, transmit, interfere, detect. No sifting yet.

    ``phi_a``/``phi_b`` pin the random phases (for controlled experiments).
    """
    n, M = params.n, params.M
    ka, kb = (int(v) for v in rng.integers(0, n, size=2))
    pa = rng.uniform(0, TWO_PI) if phi_a is None else phi_a
    pb = rng.uniform(0, TWO_PI) if phi_b is None else phi_b
    pa, pb = PhaseSample.from_radians(pa, M), PhaseSample.from_radians(pb, M)
    delta = phase_delta(total_phase(ka, pa.radians, n), total_phase(kb, pb.radians, n))
    eta = arm_transmittance(params)
    ports = port_intensities(eta * params.mu_a, eta * params.mu_b, delta, n,
                             params.interferometer)
    clicks = sample_clicks(click_probabilities(ports, params.p_d), rng)
    success = int(clicks.sum()) == 1
    detector = int(np.flatnonzero(clicks)[0]) if success else None
    return RoundRecord(ka, kb, pa, pb, delta, clicks, success, detector)


def sift_record(rec: RoundRecord, params: ProtocolParams,
                rng: np.random.Generator) -> RoundRecord:
    """Step 4 on a recorded round: misalignment, slice comparison, double flip."""
    if not rec.success:
        return rec
    n = params.n
    rec.detector = apply_misalignment(rec.detector, params.e_d, n, rng)
    ok, s, residual = slice_match(rec.phi_a.slice, rec.phi_b.slice, params.M, n)
    rec.slice_residual = residual
    if ok:
        kp, kpp = double_flip(rec.kappa_b, rec.detector, s, n)
        rec.sift = SiftOutcome(rec.detector, kp, kpp, True)
    return rec


def simulate_round(params: ProtocolParams, rng: np.random.Generator,
                   phi_a: float | None = None, phi_b: float | None = None) -> RoundRecord:
    return sift_record(record_round(params, rng, phi_a, phi_b), params, rng)


def tally_records(records, params: ProtocolParams, seed: int = 0) -> TallySummary:
    matched = sifted = errors = 0
    for rec in records:
        ok, _, _ = slice_match(rec.phi_a.slice, rec.phi_b.slice, params.M, params.n)
        matched += ok
        if rec.sift is not None:
            sifted += 1
            errors += rec.sift.kappa_b_double_prime != rec.kappa_a
    return TallySummary.from_counts(len(records), matched, sifted, errors, seed)


def _accept_lookup(M: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    ok = np.zeros(M, dtype=bool)
    s = np.zeros(M, dtype=np.int64)
    for d in range(M):
        ok[d], s[d], _ = slice_match(d, 0, M, n)
    return ok, s


def _simulate_block(params: ProtocolParams, size: int, seed_seq: np.random.SeedSequence):
    """Vectorised record + sift pass over ``size`` rounds. Returns integer tallies."""
    rng = np.random.default_rng(seed_seq)
    n, M = params.n, params.M
    ka = rng.integers(0, n, size)
    kb = rng.integers(0, n, size)
    phi_a = rng.uniform(0, TWO_PI, size)
    phi_b = rng.uniform(0, TWO_PI, size)
    u_click = rng.random((size, n))
    u_mis = rng.random(size)
    shift = rng.integers(1, n, size) if n > 1 else np.zeros(size, dtype=np.int64)

    # record
    theta_a = np.mod(phi_a + TWO_PI * ka / n, TWO_PI)
    theta_b = np.mod(phi_b + TWO_PI * kb / n, TWO_PI)
    eta = arm_transmittance(params)
    ports = port_intensities(eta * params.mu_a, eta * params.mu_b, theta_a - theta_b, n,
                             params.interferometer)
    clicks = u_click < click_probabilities(ports, params.p_d)
    success = clicks.sum(axis=1) == 1
    m_a = np.minimum((phi_a * M / TWO_PI).astype(np.int64), M - 1)
    m_b = np.minimum((phi_b * M / TWO_PI).astype(np.int64), M - 1)

    # sift
    ok_table, s_table = _accept_lookup(M, n)
    d_slice = np.mod(m_a - m_b, M)
    matched = ok_table[d_slice]
    sifted = success & matched
    det = np.argmax(clicks, axis=1)
    det = np.where(u_mis < params.e_d, np.mod(det + shift, n), det)
    kpp = np.mod(kb + det - s_table[d_slice], n)
    errors = sifted & (kpp != ka)
    return size, int(matched.sum()), int(sifted.sum()), int(errors.sum())


def run_batch(params: ProtocolParams, rounds: int, master_seed: int = 0,
              streams: int = 1, block_size: int = BLOCK_SIZE) -> TallySummary:
    """Simulate ``rounds`` rounds and return the merged tallies.

    Bit-identical for a given ``(params, rounds, master_seed)`` whatever the
    value of ``streams``.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if streams < 1:
        raise ValueError("streams must be >= 1")
    nblocks = -(-rounds // block_size)
    sizes = [block_size] * (nblocks - 1) + [rounds - block_size * (nblocks - 1)]
    seqs = [np.random.SeedSequence(master_seed, spawn_key=(i,)) for i in range(nblocks)]
    if streams == 1:
        parts = [_simulate_block(params, sz, sq) for sz, sq in zip(sizes, seqs)]
    else:
        with ThreadPoolExecutor(max_workers=streams) as pool:
            parts = list(pool.map(lambda a: _simulate_block(params, *a), zip(sizes, seqs)))
    total, matched, sifted, errors = (sum(col) for col in zip(*parts))
    return TallySummary.from_counts(total, matched, sifted, errors, master_seed)


def estimate_ex(summary: TallySummary, params: ProtocolParams, model: str | None = None,
                value: float | None = None) -> float:
    return phase_error_rate(summary.ez_hat, params, model, value)
