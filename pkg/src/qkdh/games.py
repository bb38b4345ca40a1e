"""Executable security experiments.

Three Monte-Carlo indistinguishability games (key-vs-uniform for the KEM,
two-message for the DEM, two-message for the hybrid scheme) estimate the
advantage of named distinguisher strategies with binomial confidence
intervals. For tiny parameter sets, `sd_oracle` computes the *exact*
statistical distance between the adversary's real view and the ideal view
with a uniform key, by enumerating every source of discrete randomness
with its probability weight; `distinguisher_from_set` turns the oracle's
optimal event set into a playable strategy whose advantage equals that
distance.

Canonical challenge encoding
----------------------------

Games and the enumerator must agree bit-for-bit on what "the adversary's
view" is. A challenge (adversary view Z, ciphertext C, candidate key K)
is encoded as::

    transcript.serialize() "#" JSON(list of eve records) "#"
    ciphertext.serialize() "#" key hex ":" key bit-length

and then hashed with BLAKE2b-128. Distribution tables and event sets are
keyed by that 16-byte digest.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import dem as dem_mod
from . import hashing, hybrid, kem, protocol, qsim, recon
from .bits import BitVector, bits_from_int, bits_to_hex
from .dem import DemMode
from .kem import KemAbort, KemCiphertext
from .protocol import EveView, SessionParams, Transcript
from .rng import derive_seed

Z95 = 1.959963984540054


# ---------------------------------------------------------------------------
# Challenge views and distinguishers


@dataclass
class IkindView:
    """What the key-indistinguishability adversary sees in one trial.

    `x_a` is populated only when the game is run with `expose_x_a=True`;
    it exists for the sanity-ceiling strategy and is never part of the
    adversary's legitimate view.
    """

    eve_view: EveView
    ciphertext: KemCiphertext
    key: BitVector
    params: SessionParams
    x_a: Optional[BitVector] = None


@dataclass
class DemView:
    ciphertext: dem_mod.DemCiphertext
    m0: BitVector
    m1: BitVector


@dataclass
class QheView:
    eve_view: EveView
    ciphertext: hybrid.HybridCiphertext
    m0: BitVector
    m1: BitVector
    params: SessionParams


@dataclass(frozen=True)
class Distinguisher:
    """A named guessing strategy; deterministic given the rng it is handed."""

    name: str
    decide: Callable[[object, np.random.Generator], int]
    sanity: bool = False  # uses data outside the adversary's legitimate view


def _d_constant_zero(view, rng) -> int:
    return 0


def _d_random_guess(view, rng) -> int:
    return int(rng.integers(0, 2))


def _d_first_key_bit(view: IkindView, rng) -> int:
    return int(view.key[0])


def _d_hash_parity(view: IkindView, rng) -> int:
    return int(view.key.sum() + view.ciphertext.v.sum()) & 1


def _d_recompute_key(view: IkindView, rng) -> int:
    if view.x_a is None:
        raise ValueError("recompute_key needs the game to expose x_a")
    recomputed = hashing.apply(view.ciphertext.s, view.x_a)
    return 0 if np.array_equal(recomputed, view.key) else 1


def _d_first_ct_bit(view, rng) -> int:
    body = view.ciphertext.body if isinstance(view, DemView) else view.ciphertext.c2.body
    return int(body[0]) if body.size else 0

def _d_ct_length(view: QheView, rng) -> int:
    return int(view.ciphertext.c2.body.size) & 1


IKIND_DISTINGUISHERS: dict[str, Distinguisher] = {
    d.name: d
    for d in [
        Distinguisher("constant_zero", _d_constant_zero),
        Distinguisher("random_guess", _d_random_guess),
        Distinguisher("first_key_bit", _d_first_key_bit),
        Distinguisher("hash_parity", _d_hash_parity),
        Distinguisher("recompute_key", _d_recompute_key, sanity=True),
    ]
}

DEM_DISTINGUISHERS: dict[str, Distinguisher] = {
    d.name: d
    for d in [
        Distinguisher("constant_zero", _d_constant_zero),
        Distinguisher("random_guess", _d_random_guess),
        Distinguisher("first_ct_bit", _d_first_ct_bit),
    ]
}

QHE_DISTINGUISHERS: dict[str, Distinguisher] = {
    d.name: d
    for d in [
        Distinguisher("constant_zero", _d_constant_zero),
        Distinguisher("random_guess", _d_random_guess),
        Distinguisher("first_ct_bit", _d_first_ct_bit),
        Distinguisher("ct_length", _d_ct_length),
    ]
}


# ---------------------------------------------------------------------------
# Reports


def wilson_half_width(successes: int, trials: int, z: float = Z95) -> float:
    """Half-width of the Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.5
    n, k = trials, successes
    return (z / (n + z * z)) * math.sqrt(k * (n - k) / n + z * z / 4.0)


def params_fingerprint(params: SessionParams) -> str:
    doc = {
        "lambda": params.num_signals,
        "r": params.sample_size,
        "eta0": params.qber_threshold,
        "t": params.tag_bits,
        "eps_pe": params.eps_pe,
        "eps_pa": params.eps_pa,
        "flip": params.channel.flip_prob,
        "intercept": params.adversary.intercept_prob,
        "passes": params.recon.passes,
        "seed_len": params.recon.permutation_seed_len,
        "ell_override": params.key_len_override,
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


GAME_CSV_HEADER = "game,distinguisher,params_hash,trials,advantage,ci,abort_rate"


@dataclass
class GameReport:
    """Outcome tallies of one game run, with a conservative 95% CI."""

    game: str
    distinguisher: str
    params_hash: str
    trials: int  # requested
    used: int  # non-aborted
    aborted: int
    ones_b0: int
    n_b0: int
    ones_b1: int
    n_b1: int
    degenerate: bool = False

    @property
    def advantage(self) -> float:
        if self.n_b0 == 0 or self.n_b1 == 0:
            return 0.0
        return abs(self.ones_b0 / self.n_b0 - self.ones_b1 / self.n_b1)

    @property
    def ci95(self) -> float:
        return wilson_half_width(self.ones_b0, self.n_b0) + wilson_half_width(
            self.ones_b1, self.n_b1
        )

    @property
    def abort_rate(self) -> float:
        return self.aborted / self.trials if self.trials else 0.0

    def to_json(self) -> dict:
        return {
            "game": self.game,
            "distinguisher": self.distinguisher,
            "params_hash": self.params_hash,
            "trials": self.trials,
            "used": self.used,
            "aborted": self.aborted,
            "ones_b0": self.ones_b0,
            "n_b0": self.n_b0,
            "ones_b1": self.ones_b1,
            "n_b1": self.n_b1,
            "advantage": self.advantage,
            "ci95": self.ci95,
            "abort_rate": self.abort_rate,
            "degenerate": self.degenerate,
        }

    def csv_row(self) -> str:
        return ",".join(
            [
                self.game,
                self.distinguisher,
                self.params_hash,
                str(self.trials),
                format(self.advantage, ".8f"),
                format(self.ci95, ".8f"),
                format(self.abort_rate, ".8f"),
            ]
        )


# ---------------------------------------------------------------------------
# Monte-Carlo games


def play_ikind_ot(
    params: SessionParams,
    distinguisher: Distinguisher,
    trials: int,
    rng: np.random.Generator,
    expose_x_a: bool = False,
) -> GameReport:
    """Key-indistinguishability game: real session key vs uniform key.

    Aborted generations are skipped and counted separately; the advantage
    conditions on successful executions.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tally = {0: [0, 0], 1: [0, 0]}  # b -> [ones, count]
    aborted = 0
    for i in range(trials):
        trial_params = replace(params, seed=derive_seed(params.seed, i))
        try:
            g = kem.gen(trial_params)
            out = kem.encap(g.x_a, g.params)
        except KemAbort:
            aborted += 1
            continue
        b = int(rng.integers(0, 2))
        if b == 0:
            key = out.key
        else:
            key = rng.integers(0, 2, out.key.size, dtype=np.uint8)
        view = IkindView(
            eve_view=g.eve_view,
            ciphertext=out.ciphertext,
            key=key,
            params=g.params,
            x_a=g.x_a if expose_x_a else None,
        )
        guess = int(distinguisher.decide(view, rng))
        tally[b][0] += guess
        tally[b][1] += 1
    return GameReport(
        game="ikind",
        distinguisher=distinguisher.name,
        params_hash=params_fingerprint(params),
        trials=trials,
        used=trials - aborted,
        aborted=aborted,
        ones_b0=tally[0][0],
        n_b0=tally[0][1],
        ones_b1=tally[1][0],
        n_b1=tally[1][1],
        degenerate=(trials == aborted),
    )


def fixed_pair_chooser(length: int) -> Callable:
    """Message chooser returning the all-zero / all-one pair."""

    def choose(rng: np.random.Generator) -> tuple[BitVector, BitVector]:
        return (
            np.zeros(length, dtype=np.uint8),
            np.ones(length, dtype=np.uint8),
        )

    return choose


def play_dem_ind_ot(
    mode: DemMode,
    distinguisher: Distinguisher,
    trials: int,
    chooser: Callable,
    rng: np.random.Generator,
    key_len: int = 128,
) -> GameReport:
    """Two-message indistinguishability game against the DEM alone."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tally = {0: [0, 0], 1: [0, 0]}
    for _ in range(trials):
        m0, m1 = chooser(rng)
        if m0.size != m1.size:
            raise ValueError("message pair must have equal length")
        klen = max(key_len, m0.size) if mode is DemMode.ONE_TIME_PAD else key_len
        key = dem_mod.dem_gen(klen, rng)
        b = int(rng.integers(0, 2))
        ct = dem_mod.dem_enc(key, m1 if b else m0, mode)
        guess = int(distinguisher.decide(DemView(ciphertext=ct, m0=m0, m1=m1), rng))
        tally[b][0] += guess
        tally[b][1] += 1
    return GameReport(
        game="dem",
        distinguisher=distinguisher.name,
        params_hash=hashlib.sha256(
            f"dem:{mode.value}:{key_len}".encode()
        ).hexdigest()[:12],
        trials=trials,
        used=trials,
        aborted=0,
        ones_b0=tally[0][0],
        n_b0=tally[0][1],
        ones_b1=tally[1][0],
        n_b1=tally[1][1],
    )


def play_qhe_ind_ot(
    params: SessionParams,
    distinguisher: Distinguisher,
    trials: int,
    rng: np.random.Generator,
    mode: DemMode = DemMode.ONE_TIME_PAD,
    message_len: int = 64,
    chooser: Optional[Callable] = None,
) -> GameReport:
    """Two-message game against the full hybrid scheme.

    The challenger runs a fresh session per trial; the chooser sees the
    adversary view and picks the message pair (default: all-zeros vs
    all-ones of `message_len` bits).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if chooser is None:
        fixed = fixed_pair_chooser(message_len)

        def chooser(eve_view, rng):
            return fixed(rng)

    tally = {0: [0, 0], 1: [0, 0]}
    aborted = 0
    for i in range(trials):
        trial_params = replace(params, seed=derive_seed(params.seed, i))
        try:
            g = kem.gen(trial_params)
        except KemAbort:
            aborted += 1
            continue
        m0, m1 = chooser(g.eve_view, rng)
        if m0.size != m1.size:
            raise ValueError("message pair must have equal length")
        b = int(rng.integers(0, 2))
        try:
            ct = hybrid.qhe_enc(g.x_a, m1 if b else m0, g.params, mode)
        except (KemAbort, ValueError):
            aborted += 1
            continue
        view = QheView(
            eve_view=g.eve_view, ciphertext=ct, m0=m0, m1=m1, params=g.params
        )
        guess = int(distinguisher.decide(view, rng))
        tally[b][0] += guess
        tally[b][1] += 1
    return GameReport(
        game="qhe",
        distinguisher=distinguisher.name,
        params_hash=params_fingerprint(params),
        trials=trials,
        used=trials - aborted,
        aborted=aborted,
        ones_b0=tally[0][0],
        n_b0=tally[0][1],
        ones_b1=tally[1][0],
        n_b1=tally[1][1],
        degenerate=(trials == aborted),
    )


# ---------------------------------------------------------------------------
# Exact statistical distance at tiny scales


class SdBudgetExceeded(Exception):
    """The instance's weighted state space exceeds the enumeration cap."""


SD_STATE_BUDGET = 1 << 26


def eve_view_bytes(eve_view: EveView) -> bytes:
    records = json.dumps(
        [list(t) for t in eve_view.records.as_tuples()], separators=(",", ":")
    )
    return eve_view.transcript.serialize() + b"#" + records.encode()


def challenge_digest_from_parts(
    ev_bytes: bytes, ciphertext_json: str, key_hex: str, key_len: int
) -> bytes:
    data = ev_bytes + b"#" + ciphertext_json.encode() + b"#" + key_hex.encode()
    data += b":" + str(key_len).encode()
    return hashlib.blake2b(data, digest_size=16).digest()


def view_digest_from_parts(ev_bytes: bytes, ciphertext_json: str) -> bytes:
    """Digest of (Z, C) only, for marginal-distribution checks."""
    data = ev_bytes + b"#" + ciphertext_json.encode()
    return hashlib.blake2b(data, digest_size=16).digest()


def challenge_digest(view: IkindView) -> bytes:
    return challenge_digest_from_parts(
        eve_view_bytes(view.eve_view),
        view.ciphertext.serialize(),
        bits_to_hex(view.key),
        int(view.key.size),
    )


def statistical_distance(p: dict, q: dict) -> float:
    """Half the L1 distance between two distributions given as tables."""
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def optimal_event_set(p: dict, q: dict) -> frozenset:
    """The advantage-maximizing event set: everywhere p outweighs q."""
    return frozenset(k for k in set(p) | set(q) if p.get(k, 0.0) > q.get(k, 0.0))


@dataclass
class SdOracleResult:
    sd: float
    w_set: frozenset
    real: dict
    ideal: dict
    real_zc: dict
    ideal_zc: dict
    states: int
    abort_fraction: float
    ell: int

    @property
    def marginal_sd(self) -> float:
        return statistical_distance(self.real_zc, self.ideal_zc)


def _state_bound(params: SessionParams) -> int:
    """Upper bound on the weighted state count, used for the budget gate."""
    lam = params.num_signals
    p = params.channel.flip_prob
    q = params.adversary.intercept_prob
    per_symbol = 2  # Alice's bit
    if 0.0 < p < 1.0:
        per_symbol *= 2
    if q == 0.0:
        pass
    elif q == 1.0:
        per_symbol *= 5
    else:
        per_symbol *= 6
    quantum = (4 * per_symbol) ** lam  # bases contribute the factor 4
    r = params.sample_size
    subsets = math.comb(lam, min(r, lam))
    cfg = params.recon
    if cfg.permutation_seed_len == 0:
        seeds = 1
    elif cfg.seed_choices is not None:
        seeds = len(cfg.seed_choices) ** cfg.passes
    else:
        raise SdBudgetExceeded(
            "interleaver seed space is not enumerable; set seed_choices or "
            "a zero seed length"
        )
    n_max = max(lam - r, 1)
    ell = params.key_len_override or 0
    hash_states = 2 ** (n_max + ell - 1) * 2 ** (n_max + params.tag_bits - 1)
    return quantum * subsets * seeds * hash_states


def _channel_branches(a_bit: int, a_basis: int, b_basis: int, params: SessionParams):
    """All channel/adversary outcomes for one symbol, with weights.

    Yields (bob_outcome, eve_entry, weight); the outcome is None for
    positions sifting will discard, the entry is None when not intercepted.
    """
    p = params.channel.flip_prob
    q = params.adversary.intercept_prob
    kept = a_basis == b_basis

    flip_branches = [(0, 1.0)] if p == 0.0 else [(0, 1.0 - p), (1, p)]
    intercept_branches = []
    if q < 1.0:
        intercept_branches.append((False, 1.0 - q))
    if q > 0.0:
        intercept_branches.append((True, q))

    out = []
    for flip, w_f in flip_branches:
        noisy = a_bit ^ flip
        for hit, w_i in intercept_branches:
            w = w_f * w_i
            if not hit:
                out.append((noisy if kept else None, None, w))
                continue
            for e_basis in (0, 1):
                w_e = w * 0.5
                if e_basis == a_basis:
                    eve_outs = [(noisy, 1.0)]
                else:
                    eve_outs = [(0, 0.5), (1, 0.5)]
                for e_out, w_o in eve_outs:
                    w_eo = w_e * w_o
                    if not kept:
                        out.append((None, (e_basis, e_out), w_eo))
                    elif b_basis == e_basis:
                        out.append((e_out, (e_basis, e_out), w_eo))
                    else:
                        out.append((0, (e_basis, e_out), w_eo * 0.5))
                        out.append((1, (e_basis, e_out), w_eo * 0.5))
    return out


_seed_family_cache: dict[tuple[int, int], tuple[list, np.ndarray, list]] = {}


def _seed_family(n: int, m: int) -> tuple[list, np.ndarray, list]:
    """All Toeplitz seeds of shape (n -> m): objects, diagonal matrix, hexes."""
    key = (n, m)
    if key not in _seed_family_cache:
        width = n + m - 1
        count = 1 << width
        diag_matrix = (
            (np.arange(count, dtype=np.int64)[:, None] >> np.arange(width - 1, -1, -1))
            & 1
        ).astype(np.uint8)
        seeds = [
            hashing.ToeplitzSeed(n=n, m=m, diagonals=diag_matrix[i])
            for i in range(count)
        ]
        hexes = [bits_to_hex(diag_matrix[i]) for i in range(count)]
        _seed_family_cache[key] = (seeds, diag_matrix, hexes)
    return _seed_family_cache[key]


def _all_seed_hashes(n: int, m: int, x: BitVector) -> np.ndarray:
    """Hash of x under every Toeplitz seed of shape (n -> m), as integers."""
    _, diag_matrix, _ = _seed_family(n, m)
    # output bit i of seed s depends on diagonal entries i-j+n-1 over j
    values = np.zeros(diag_matrix.shape[0], dtype=np.int64)
    for i in range(m):
        cols = [i - j + n - 1 for j in range(n) if x[j]]
        values <<= 1
        if cols:
            values |= (diag_matrix[:, cols].sum(axis=1) & 1).astype(np.int64)
    return values


def sd_oracle(params: SessionParams, budget: int = SD_STATE_BUDGET) -> SdOracleResult:
    """Exact SD((Z, C, K), (Z, C, U)) for an enumerable tiny instance.

    Walks every assignment of Alice's bits and bases, Bob's bases, channel
    noise, adversary choices, the estimation sample, the interleaver seeds
    and both hash seeds, weighting each by its probability, conditioned on
    the protocol not aborting. Refuses instances whose weighted state
    count can exceed the budget.
    """
    params.validate()
    if params.key_len_override is None:
        raise ValueError("tiny instances must pin the key length (key_len_override)")
    bound = _state_bound(params)
    if bound > budget:
        raise SdBudgetExceeded(
            f"state bound {bound} exceeds enumeration budget {budget}"
        )

    lam = params.num_signals
    r = params.sample_size
    ell = params.key_len_override
    t = params.tag_bits
    cfg = params.recon
    min_raw = max(1, t, ell)

    if cfg.permutation_seed_len == 0:
        seed_combos = [(0,) * cfg.passes]
        seed_combo_weight = 1.0
    else:
        seed_combos = list(itertools.product(cfg.seed_choices, repeat=cfg.passes))
        seed_combo_weight = 1.0 / len(seed_combos)

    real: dict[bytes, float] = {}
    ideal: dict[bytes, float] = {}
    real_zc: dict[bytes, float] = {}
    states = 0
    aborted_weight = 0.0
    completed_weight = 0.0
    key_hex_table = [bits_to_hex(bits_from_int(v, ell)) for v in range(1 << ell)]
    uniform_key = 1.0 / (1 << ell)

    base_weight = 0.5 ** (3 * lam)  # Alice bits/bases and Bob bases
    symbol_space = list(itertools.product((0, 1), repeat=lam))

    for a_bits in symbol_space:
        for a_bases in symbol_space:
            for b_bases in symbol_space:
                branch_lists = [
                    _channel_branches(a_bits[i], a_bases[i], b_bases[i], params)
                    for i in range(lam)
                ]
                for combo in itertools.product(*branch_lists):
                    w_channel = base_weight
                    bob_outcomes = np.zeros(lam, dtype=np.uint8)
                    entries = []
                    for i, (outcome, entry, w) in enumerate(combo):
                        w_channel *= w
                        if outcome is not None:
                            bob_outcomes[i] = outcome
                        if entry is not None:
                            entries.append((i, entry[0], entry[1]))
                    record = qsim.EveRecord(
                        indices=np.array([e[0] for e in entries], dtype=np.int64),
                        bases=np.array([e[1] for e in entries], dtype=np.uint8),
                        outcomes=np.array([e[2] for e in entries], dtype=np.uint8),
                    )
                    pair = protocol.sift(
                        np.array(a_bits, dtype=np.uint8),
                        np.array(a_bases, dtype=np.uint8),
                        np.array(b_bases, dtype=np.uint8),
                        bob_outcomes,
                    )
                    if pair.length <= r + min_raw - 1:
                        aborted_weight += w_channel
                        states += 1
                        continue
                    n_subsets = math.comb(pair.length, r)
                    w_subset = w_channel / n_subsets
                    for sample in itertools.combinations(range(pair.length), r):
                        est, x_a, x_b = protocol.estimate(
                            pair,
                            r,
                            params.qber_threshold,
                            rng=None,
                            sample_indices=np.array(sample, dtype=np.int64),
                        )
                        if est.outcome == "abort":
                            aborted_weight += w_subset
                            states += 1
                            continue
                        transcript = Transcript()
                        transcript.append("alice_bases", np.array(a_bases, dtype=np.uint8))
                        transcript.append("bob_bases", np.array(b_bases, dtype=np.uint8))
                        transcript.append("sample_indices", est.sample_indices)
                        transcript.append(
                            "alice_sample_bits", pair.x_a[est.sample_indices]
                        )
                        transcript.append(
                            "bob_sample_bits", pair.x_b[est.sample_indices]
                        )
                        ev_bytes = eve_view_bytes(
                            EveView(transcript=transcript, records=record)
                        )
                        n = x_a.size
                        s_family, _, s_hexes = _seed_family(n, ell)
                        sp_family, _, sp_hexes = _seed_family(n, t)
                        tag_hex_table = [
                            bits_to_hex(bits_from_int(v, t)) for v in range(1 << t)
                        ]
                        for seeds in seed_combos:
                            # (Z, C, K) is a function of Alice's side only;
                            # Bob's correction never enters the tuple.
                            w_recon = w_subset * seed_combo_weight
                            helper = recon.enc_with_seeds(x_a, cfg, list(seeds))
                            key_vals = _all_seed_hashes(n, ell, x_a)
                            tag_vals = _all_seed_hashes(n, t, x_a)
                            w_state = w_recon / len(s_family) / len(sp_family)
                            completed_weight += w_recon
                            w_json = json.dumps(
                                helper.to_json(), separators=(",", ":"), sort_keys=True
                            )
                            # Splice the ciphertext JSON from parts; the
                            # layout is asserted against the real
                            # serializer once per recon state below.
                            prefix = f'{{"ell":{ell},"n":{n},"s":{{"diagonals":"'
                            mid1 = f'","m":{ell},"n":{n}}},"s_prime":{{"diagonals":"'
                            mid2 = f'","m":{t},"n":{n}}},"t":{t},"v":"'
                            suffix = f'","w":{w_json}}}'
                            probe = KemCiphertext(
                                w=helper,
                                s=s_family[0],
                                s_prime=sp_family[0],
                                v=bits_from_int(int(tag_vals[0]), t),
                            )
                            assembled = (
                                prefix
                                + s_hexes[0]
                                + mid1
                                + sp_hexes[0]
                                + mid2
                                + tag_hex_table[int(tag_vals[0])]
                                + suffix
                            )
                            if assembled != probe.serialize():
                                raise AssertionError(
                                    "ciphertext template out of sync with serializer"
                                )
                            for i_sp in range(len(sp_family)):
                                head = prefix
                                tail = (
                                    mid1
                                    + sp_hexes[i_sp]
                                    + mid2
                                    + tag_hex_table[int(tag_vals[i_sp])]
                                    + suffix
                                )
                                for i_s in range(len(s_family)):
                                    ct_json = head + s_hexes[i_s] + tail
                                    # Real world: the session key. Ideal
                                    # world: same (Z, C), uniform key.
                                    digests = [
                                        challenge_digest_from_parts(
                                            ev_bytes, ct_json, key_hex_table[v], ell
                                        )
                                        for v in range(1 << ell)
                                    ]
                                    real_dig = digests[int(key_vals[i_s])]
                                    real[real_dig] = real.get(real_dig, 0.0) + w_state
                                    w_ideal = w_state * uniform_key
                                    for dig in digests:
                                        ideal[dig] = ideal.get(dig, 0.0) + w_ideal
                                    zc = view_digest_from_parts(ev_bytes, ct_json)
                                    real_zc[zc] = real_zc.get(zc, 0.0) + w_state
                                    states += 1

    if completed_weight <= 0.0:
        raise ValueError("no completed executions; instance always aborts")

    # Condition on completion.
    real = {k: v / completed_weight for k, v in real.items()}
    ideal = {k: v / completed_weight for k, v in ideal.items()}
    real_zc = {k: v / completed_weight for k, v in real_zc.items()}

    sd = statistical_distance(real, ideal)
    w_set = optimal_event_set(real, ideal)
    return SdOracleResult(
        sd=sd,
        w_set=w_set,
        real=real,
        ideal=ideal,
        real_zc=real_zc,
        ideal_zc=dict(real_zc),
        states=states,
        abort_fraction=aborted_weight / (aborted_weight + completed_weight),
        ell=ell,
    )


def distinguisher_from_set(w_set: frozenset) -> Distinguisher:
    """Membership test on the oracle's optimal event set.

    Played in the key-indistinguishability game on the same instance, its
    advantage equals the exact statistical distance.
    """

    def decide(view: IkindView, rng: np.random.Generator) -> int:
        return 1 if challenge_digest(view) in w_set else 0

    return Distinguisher(name="sd_membership", decide=decide)


def tiny_instance_params(
    lam: int = 3,
    sample_r: int = 1,
    flip_prob: float = 0.0,
    intercept_prob: float = 0.0,
    ell: int = 2,
    tag_bits: int = 2,
    eta0: float = 0.49,
    seed: int = 0,
) -> SessionParams:
    """A canonical enumerable instance: identity interleaver, pinned key
    length, one reconciliation pass."""
    kind = (
        qsim.AdversaryKind.PASSIVE
        if intercept_prob == 0.0
        else qsim.AdversaryKind.INTERCEPT_RESEND
    )
    return SessionParams(
        num_signals=lam,
        sample_size=sample_r,
        qber_threshold=eta0,
        tag_bits=tag_bits,
        channel=qsim.ChannelModel(flip_prob),
        adversary=qsim.AdversaryStrategy(kind, intercept_prob),
        recon=recon.ReconConfig(passes=1, permutation_seed_len=0),
        seed=seed,
        key_len_override=ell,
    )
