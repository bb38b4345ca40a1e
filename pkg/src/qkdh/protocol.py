"""Full QKD session orchestration and the finite-size key-length policy.

A session runs: quantum exchange -> sifting -> parameter estimation (with
its abort gate) -> one-way reconciliation -> privacy amplification. The
public side channel is captured in a Transcript, and the adversary's view
(transcript plus quantum-channel measurement records) in an EveView.

Seed discipline: a session is driven by one 64-bit seed; each stage uses
its own PCG64 generator under a SplitMix64-derived sub-seed (see `rng`),
so stages are reproducible independently of each other.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import hashing, qsim, recon
from .bits import BitVector, as_bits, bits_to_hex
from .rng import derive_seed, make_generator

# Stage tags for sub-seed derivation from SessionParams.seed.
DOM_QUANTUM = 0
DOM_ESTIMATE = 1
DOM_RECON = 2
DOM_HASH = 3
DOM_DEM = 4


class ParamError(ValueError):
    """Invalid session parameter; `field` names the offender."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SessionParams:
    """Every knob a session needs, plus the master seed.

    `measured_qber` is filled in by the correlation phase and consumed by
    encapsulation when it computes the key length; `key_len_override`
    bypasses the length policy for game and enumeration instances that pin
    a tiny output length.
    """

    num_signals: int
    sample_size: int
    qber_threshold: float
    tag_bits: int = 32
    eps_pe: float = 2.0**-20
    eps_pa: float = 2.0**-20
    channel: qsim.ChannelModel = qsim.ChannelModel(0.0)
    adversary: qsim.AdversaryStrategy = qsim.AdversaryStrategy.passive()
    recon: recon.ReconConfig = recon.ReconConfig()
    seed: int = 0
    measured_qber: Optional[float] = None
    key_len_override: Optional[int] = None

    def validate(self) -> None:
        if self.num_signals <= 0:
            raise ParamError("lambda", "number of signals must be positive")
        expected_sifted = self.num_signals / 2
        if not 0 < self.sample_size < expected_sifted:
            raise ParamError(
                "sample_r",
                f"sample size must lie in (0, {expected_sifted:.0f}) "
                "(half the signal count)",
            )
        if not 0 < self.qber_threshold < 0.5:
            raise ParamError("eta0", "threshold must lie in (0, 0.5)")
        if self.tag_bits < 1:
            raise ParamError("tag_bits", "tag length must be >= 1")
        if not 0 < self.eps_pe < 1:
            raise ParamError("eps_pe", "must lie in (0, 1)")
        if not 0 < self.eps_pa < 1:
            raise ParamError("eps_pa", "must lie in (0, 1)")

    def with_measured_qber(self, eta_hat: float) -> "SessionParams":
        return replace(self, measured_qber=eta_hat)

    def stage_rng(self, domain: int) -> np.random.Generator:
        return make_generator(derive_seed(self.seed, domain))


@dataclass
class SiftedPair:
    """Matching-basis substrings of both parties, with their origins."""

    x_a: BitVector
    x_b: BitVector
    kept_indices: np.ndarray

    @property
    def length(self) -> int:
        return int(self.x_a.size)


@dataclass
class EstimationResult:
    eta_hat: float
    sample_indices: np.ndarray
    outcome: str  # "ok" or "abort"


@dataclass
class Transcript:
    """Ordered record of everything sent on the public channel."""

    messages: list[tuple[str, object]] = field(default_factory=list)

    def append(self, label: str, payload) -> None:
        self.messages.append((label, payload))

    def serialize(self) -> bytes:
        """Canonical byte encoding; replaying it must be lossless."""
        doc = []
        for label, payload in self.messages:
            if isinstance(payload, np.ndarray):
                payload = [int(v) for v in payload]
            doc.append([label, payload])
        return json.dumps(doc, separators=(",", ":"), sort_keys=False).encode()

    def digest(self) -> str:
        return hashlib.sha256(self.serialize()).hexdigest()

    def summary(self) -> dict:
        sizes = []
        for label, payload in self.messages:
            size = payload.size if isinstance(payload, np.ndarray) else len(str(payload))
            sizes.append({"label": label, "items": int(size)})
        return {"messages": sizes, "digest": self.digest()}


@dataclass
class EveView:
    """Everything the adversary holds: public transcript + channel records."""

    transcript: Transcript
    records: qsim.EveRecord


@dataclass
class SessionOutcome:
    status: str  # completed | aborted_pe | aborted_len
    params: SessionParams
    eta_hat: Optional[float]
    ell: int
    key_a: Optional[BitVector]
    key_b: Optional[BitVector]
    transcript: Transcript
    eve_view: EveView
    x_a: Optional[BitVector] = None
    x_b_corrected: Optional[BitVector] = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    @property
    def frame_corrected(self) -> Optional[bool]:
        if self.x_a is None or self.x_b_corrected is None:
            return None
        return bool(np.array_equal(self.x_a, self.x_b_corrected))

    def to_json(self) -> dict:
        keys = None
        if self.key_a is not None:
            keys = {"k_a": bits_to_hex(self.key_a), "k_b": bits_to_hex(self.key_b)}
        return {
            "status": self.status,
            "lambda": self.params.num_signals,
            "ell": self.ell,
            "eta_hat": self.eta_hat,
            "keys": keys,
            "transcript": self.transcript.summary(),
        }


def binary_entropy(p: float) -> float:
    """Shannon entropy of a Bernoulli(p) bit, with 0*log(0) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("probability outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def sift(
    alice_bits: BitVector,
    alice_bases: BitVector,
    bob_bases: BitVector,
    bob_outcomes: BitVector,
) -> SiftedPair:
    """Keep only the positions where both parties used the same basis."""
    arrays = [as_bits(a) for a in (alice_bits, alice_bases, bob_bases, bob_outcomes)]
    if len({a.size for a in arrays}) != 1:
        raise ValueError("all four input vectors must have equal length")
    alice_bits, alice_bases, bob_bases, bob_outcomes = arrays
    kept = np.nonzero(alice_bases == bob_bases)[0]
    return SiftedPair(
        x_a=alice_bits[kept].copy(),
        x_b=bob_outcomes[kept].copy(),
        kept_indices=kept.astype(np.int64),
    )


def estimate(
    pair: SiftedPair,
    r: int,
    eta0: float,
    rng: np.random.Generator,
    sample_indices: Optional[np.ndarray] = None,
) -> tuple[EstimationResult, BitVector, BitVector]:
    """Measure the error rate on a random sample and apply the abort gate.

    The sample positions are removed from both strings; the sampled bits of
    both parties become public. `sample_indices` can be forced for
    exhaustive analyses; by default a uniform r-subset is drawn.
    Aborts strictly above the threshold: eta_hat == eta0 still passes.
    """
    n_sifted = pair.length
    if not 0 < r < n_sifted:
        raise ValueError(f"sample size must lie in (0, {n_sifted})")
    if sample_indices is None:
        sample_indices = rng.choice(n_sifted, size=r, replace=False)
    sample_indices = np.sort(np.asarray(sample_indices, dtype=np.int64))
    if sample_indices.size != r:
        raise ValueError("forced sample has wrong size")

    diff = pair.x_a[sample_indices] ^ pair.x_b[sample_indices]
    eta_hat = float(np.count_nonzero(diff)) / r
    outcome = "ok" if eta_hat <= eta0 else "abort"
    result = EstimationResult(eta_hat=eta_hat, sample_indices=sample_indices, outcome=outcome)

    mask = np.ones(n_sifted, dtype=bool)
    mask[sample_indices] = False
    return result, pair.x_a[mask].copy(), pair.x_b[mask].copy()


def finite_size_penalty(r: int, eps_pe: float) -> float:
    """One-sided Hoeffding slack on the sampled error rate."""
    return math.sqrt(math.log(2.0 / eps_pe) / (2.0 * r))


def key_length_from_penalty(
    n: int, eta_hat: float, mu: float, leak_w: int, t: int, eps_pa: float
) -> int:
    """Core extractable-length formula with an explicit penalty term."""
    eta_eff = min(eta_hat + mu, 0.5)
    value = n * (1.0 - binary_entropy(eta_eff)) - leak_w - t - 2.0 * math.log2(1.0 / eps_pa)
    return max(0, math.floor(value))


def key_length(
    n: int,
    eta_hat: float,
    r: int,
    eps_pe: float,
    leak_w: int,
    t: int,
    eps_pa: float,
) -> int:
    """Final key length: entropy at the penalized error rate, minus the
    exact reconciliation leakage, the tag and the extractor loss."""
    return key_length_from_penalty(
        n, eta_hat, finite_size_penalty(r, eps_pe), leak_w, t, eps_pa
    )


@dataclass
class RawKeyExchange:
    """Everything produced by the correlation phase (pre-reconciliation)."""

    params: SessionParams  # with measured_qber filled in
    x_a: BitVector
    x_b: BitVector
    estimation: Optional[EstimationResult]
    transcript: Transcript
    eve_view: EveView
    sifted_len: int
    status: str = "ok"  # ok | aborted_pe | aborted_short

    @property
    def aborted(self) -> bool:
        return self.status != "ok"

    @property
    def eta_hat(self) -> Optional[float]:
        return None if self.estimation is None else self.estimation.eta_hat


def _min_raw_len(params: SessionParams) -> int:
    """Smallest post-sampling length the hash stages can work with."""
    return max(1, params.tag_bits, params.key_len_override or 1)


def exchange_raw_keys(params: SessionParams) -> RawKeyExchange:
    """Run the quantum phase, sifting and parameter estimation.

    Populates the transcript with the basis announcements, the sample
    index set and both parties' sampled bits (both sides are published so
    either party can compute the error rate).
    """
    params.validate()
    lam = params.num_signals
    rng_q = params.stage_rng(DOM_QUANTUM)

    alice_bits = rng_q.integers(0, 2, lam, dtype=np.uint8)
    alice_bases = rng_q.integers(0, 2, lam, dtype=np.uint8)
    bob_bases = rng_q.integers(0, 2, lam, dtype=np.uint8)
    sent_bits, sent_bases, eve_record = qsim.transmit_stream(
        alice_bits, alice_bases, params.channel, params.adversary, rng_q
    )
    bob_outcomes = qsim.measure_stream(sent_bits, sent_bases, bob_bases, rng_q)

    pair = sift(alice_bits, alice_bases, bob_bases, bob_outcomes)

    transcript = Transcript()
    transcript.append("alice_bases", alice_bases)
    transcript.append("bob_bases", bob_bases)
    eve_view = EveView(transcript=transcript, records=eve_record)

    # Undersized sifted strings (a toy-scale event; the expected length is
    # validated upfront) cannot feed estimation or the hash stages.
    if pair.length <= params.sample_size + _min_raw_len(params) - 1:
        return RawKeyExchange(
            params=params,
            x_a=np.zeros(0, dtype=np.uint8),
            x_b=np.zeros(0, dtype=np.uint8),
            estimation=None,
            transcript=transcript,
            eve_view=eve_view,
            sifted_len=pair.length,
            status="aborted_short",
        )

    est, x_a, x_b = estimate(
        pair, params.sample_size, params.qber_threshold, params.stage_rng(DOM_ESTIMATE)
    )
    transcript.append("sample_indices", est.sample_indices)
    transcript.append("alice_sample_bits", pair.x_a[est.sample_indices])
    transcript.append("bob_sample_bits", pair.x_b[est.sample_indices])

    return RawKeyExchange(
        params=params.with_measured_qber(est.eta_hat),
        x_a=x_a,
        x_b=x_b,
        estimation=est,
        transcript=transcript,
        eve_view=eve_view,
        sifted_len=pair.length,
        status="aborted_pe" if est.outcome == "abort" else "ok",
    )


def run_session(params: SessionParams) -> SessionOutcome:
    """Execute a complete session and return keys, transcript and Eve view."""
    ex = exchange_raw_keys(params)
    if ex.aborted:
        return SessionOutcome(
            status=ex.status,
            params=ex.params,
            eta_hat=ex.eta_hat,
            ell=0,
            key_a=None,
            key_b=None,
            transcript=ex.transcript,
            eve_view=ex.eve_view,
        )

    n = ex.x_a.size
    helper = recon.enc(ex.x_a, params.recon, params.stage_rng(DOM_RECON))
    x_b_corrected = recon.dec(helper, ex.x_b, params.recon)

    eta_hat = ex.estimation.eta_hat
    if params.key_len_override is not None:
        ell = params.key_len_override
    else:
        ell = key_length(
            n,
            eta_hat,
            params.sample_size,
            params.eps_pe,
            helper.total_bits,
            params.tag_bits,
            params.eps_pa,
        )
    ex.transcript.append("helper_data", helper.to_json())
    if ell == 0:
        return SessionOutcome(
            status="aborted_len",
            params=ex.params,
            eta_hat=eta_hat,
            ell=0,
            key_a=None,
            key_b=None,
            transcript=ex.transcript,
            eve_view=ex.eve_view,
            x_a=ex.x_a,
            x_b_corrected=x_b_corrected,
        )

    rng_h = params.stage_rng(DOM_HASH)
    seed_key = hashing.sample_seed(n, ell, rng_h)
    seed_tag = hashing.sample_seed(n, params.tag_bits, rng_h)
    tag = hashing.apply(seed_tag, ex.x_a)
    key_a = hashing.apply(seed_key, ex.x_a)
    key_b = hashing.apply(seed_key, x_b_corrected)

    ex.transcript.append("hash_seed", seed_key.to_json())
    ex.transcript.append("tag_seed", seed_tag.to_json())
    ex.transcript.append("tag", bits_to_hex(tag))

    return SessionOutcome(
        status="completed",
        params=ex.params,
        eta_hat=eta_hat,
        ell=ell,
        key_a=key_a,
        key_b=key_b,
        transcript=ex.transcript,
        eve_view=ex.eve_view,
        x_a=ex.x_a,
        x_b_corrected=x_b_corrected,
    )
