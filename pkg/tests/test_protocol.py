import json
import math

import numpy as np
import pytest

from qkdh import qsim
from qkdh.bits import as_bits
from qkdh.protocol import (
    ParamError,
    SessionParams,
    SiftedPair,
    Transcript,
    binary_entropy,
    estimate,
    exchange_raw_keys,
    finite_size_penalty,
    key_length,
    key_length_from_penalty,
    run_session,
    sift,
)
from qkdh.recon import ReconConfig
from qkdh.rng import make_generator

# Expected key lengths evaluated independently with mpmath (50 digits) on
# (n, eta_hat, r, leak_w, t, -log2(eps_pe), -log2(eps_pa)).
KEY_LENGTH_GRID = [
    (1024, 0.00, 256, 300, 16, 20, 20, 0),
    (1024, 0.01, 256, 300, 16, 20, 20, 0),
    (1024, 0.05, 512, 500, 32, 20, 20, 0),
    (2048, 0.02, 1024, 950, 32, 20, 20, 37),
    (4096, 0.02, 4096, 3644, 32, 20, 20, 0),
    (4096, 0.01, 4096, 1822, 32, 20, 20, 991),
    (8192, 0.03, 4096, 3576, 32, 30, 30, 1194),
    (12288, 0.01, 4096, 5332, 32, 20, 20, 3253),
    (12288, 0.04, 4096, 5332, 32, 20, 20, 1849),
    (16384, 0.02, 8192, 7100, 64, 40, 40, 3668),
    (100, 0.00, 1000000, 0, 0, 20, 20, 57),
    (100, 0.49, 100, 0, 0, 20, 20, 0),
    (500, 0.25, 2000, 100, 8, 10, 10, 0),
    (1000, 0.11, 5000, 430, 16, 20, 20, 0),
    (65536, 0.01, 16384, 28500, 32, 20, 20, 23872),
    (65536, 0.05, 16384, 28500, 32, 20, 20, 12720),
    (7, 0.00, 100, 10, 1, 3, 3, 0),
    (12288, 0.00, 4096, 10664, 32, 20, 20, 0),
    (3000, 0.10, 3000, 1290, 24, 25, 25, 0),
    (2048, 0.45, 512, 900, 16, 20, 20, 0),
]


def passive_params(**overrides):
    defaults = dict(
        num_signals=1 << 14,
        sample_size=4096,
        qber_threshold=0.11,
        recon=ReconConfig(passes=1),
        seed=11,
    )
    defaults.update(overrides)
    return SessionParams(**defaults)


class TestBinaryEntropy:
    def test_edges(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0
        assert binary_entropy(0.5) == 1.0

    def test_literature_value(self):
        assert binary_entropy(0.11) == pytest.approx(0.499916, abs=1e-6)

    def test_domain(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.01)
        with pytest.raises(ValueError):
            binary_entropy(1.01)


class TestSift:
    def test_all_bases_equal(self):
        bits = as_bits([1, 0, 1, 1])
        bases = as_bits([0, 1, 0, 1])
        pair = sift(bits, bases, bases, bits)
        assert pair.length == 4
        assert np.array_equal(pair.x_a, bits)

    def test_all_bases_differ(self):
        bases = as_bits([0, 0, 1, 1])
        pair = sift(as_bits([1, 0, 1, 0]), bases, bases ^ 1, as_bits([0, 0, 0, 0]))
        assert pair.length == 0

    def test_uniform_bases_keep_about_half(self):
        rng = make_generator(0)
        lam = 10_000
        bits = rng.integers(0, 2, lam, dtype=np.uint8)
        a = rng.integers(0, 2, lam, dtype=np.uint8)
        b = rng.integers(0, 2, lam, dtype=np.uint8)
        pair = sift(bits, a, b, bits)
        assert 0.47 <= pair.length / lam <= 0.53

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            sift(as_bits([1]), as_bits([0, 1]), as_bits([0, 1]), as_bits([1, 1]))


class TestEstimate:
    def test_direct_formula_on_forced_sample(self):
        pair = SiftedPair(
            x_a=as_bits([1, 0, 1, 0, 1, 1]),
            x_b=as_bits([1, 1, 1, 0, 0, 1]),
            kept_indices=np.arange(6),
        )
        # forced sample covering positions 0..3: x_a 1010 vs x_b 1110
        est, x_a, x_b = estimate(
            pair, 4, 0.5, rng=None, sample_indices=np.array([0, 1, 2, 3])
        )
        assert est.eta_hat == 0.25
        assert est.outcome == "ok"
        assert list(x_a) == [1, 1] and list(x_b) == [0, 1]

    def test_identical_strings(self):
        pair = SiftedPair(
            x_a=as_bits([1, 0, 1, 0]), x_b=as_bits([1, 0, 1, 0]), kept_indices=np.arange(4)
        )
        est, _, _ = estimate(pair, 2, 0.0, make_generator(1))
        assert est.eta_hat == 0.0 and est.outcome == "ok"

    def test_boundary_rate_still_passes(self):
        pair = SiftedPair(
            x_a=as_bits([1, 0, 0, 0]), x_b=as_bits([0, 0, 0, 0]), kept_indices=np.arange(4)
        )
        est, _, _ = estimate(
            pair, 2, 0.5, rng=None, sample_indices=np.array([0, 1])
        )
        assert est.eta_hat == 0.5
        assert est.outcome == "ok"

    def test_sample_size_bounds(self):
        pair = SiftedPair(
            x_a=as_bits([1, 0]), x_b=as_bits([1, 0]), kept_indices=np.arange(2)
        )
        with pytest.raises(ValueError):
            estimate(pair, 2, 0.1, make_generator(2))

    def test_intercept_anchor_with_abort(self):
        params = passive_params(
            adversary=qsim.AdversaryStrategy.intercept_resend(1.0), seed=21
        )
        ex = exchange_raw_keys(params)
        assert 0.22 <= ex.eta_hat <= 0.28
        assert ex.status == "aborted_pe"


class TestKeyLength:
    def test_zero_penalty_arithmetic(self):
        # eta 0, no leakage, no tag, extractor loss 2*20: 100 - 40
        assert key_length_from_penalty(100, 0.0, 0.0, 0, 0, 2.0**-20) == 60

    def test_cap_forces_zero(self):
        assert key_length(1 << 16, 0.45, 100, 0.5, 0, 0, 2.0**-20) == 0
        assert key_length_from_penalty(1 << 16, 0.5, 0.0, 0, 0, 2.0**-20) == 0

    @pytest.mark.parametrize("row", KEY_LENGTH_GRID)
    def test_against_independent_evaluation(self, row):
        n, eta, r, leak, t, lg_pe, lg_pa, expected = row
        got = key_length(n, eta, r, 2.0**-lg_pe, leak, t, 2.0**-lg_pa)
        assert got == expected

    def test_monotone_in_eta(self):
        values = [
            key_length(8192, eta, 4096, 2.0**-20, 3000, 32, 2.0**-20)
            for eta in np.linspace(0.0, 0.5, 26)
        ]
        assert all(b <= a for a, b in zip(values, values[1:]))

    def test_monotone_in_leak_and_tag(self):
        base = (8192, 0.02, 4096, 2.0**-20)
        leaks = [key_length(*base[:2], base[2], base[3], L, 32, 2.0**-20) for L in range(0, 6000, 500)]
        assert all(b <= a for a, b in zip(leaks, leaks[1:]))
        tags = [key_length(*base[:2], base[2], base[3], 3000, t, 2.0**-20) for t in range(1, 257, 32)]
        assert all(b <= a for a, b in zip(tags, tags[1:]))

    def test_monotone_in_n(self):
        values = [
            key_length(n, 0.02, 4096, 2.0**-20, 1000, 32, 2.0**-20)
            for n in range(2048, 32768, 2048)
        ]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_penalty_formula(self):
        assert finite_size_penalty(4096, 2.0**-20) == pytest.approx(
            math.sqrt(math.log(2 * 2**20) / 8192)
        )


class TestRunSession:
    def test_noiseless_passive_completes_with_equal_keys(self):
        out = run_session(passive_params())
        assert out.status == "completed"
        assert out.eta_hat == 0.0
        assert out.ell > 0
        assert np.array_equal(out.key_a, out.key_b)
        assert out.key_a.size == out.ell

    def test_intercept_aborts_at_low_threshold(self):
        params = passive_params(
            adversary=qsim.AdversaryStrategy.intercept_resend(1.0)
        )
        out = run_session(params)
        assert out.status == "aborted_pe"
        assert out.key_a is None and out.key_b is None

    def test_two_pass_leakage_exhausts_key_at_this_scale(self):
        # exact syndrome accounting (6/7 bit per bit over two passes)
        # exceeds the extractable entropy at r=4096 no matter the QBER
        out = run_session(passive_params(recon=ReconConfig(passes=2)))
        assert out.status == "aborted_len"
        assert out.ell == 0

    def test_key_agreement_follows_frame_correction(self):
        for i in range(5):
            out = run_session(
                passive_params(
                    num_signals=1 << 15,
                    qber_threshold=0.05,
                    channel=qsim.ChannelModel(0.01),
                    seed=31 + i,
                )
            )
            assert out.status == "completed"
            if out.frame_corrected:
                assert np.array_equal(out.key_a, out.key_b)
            else:
                assert not np.array_equal(out.key_a, out.key_b)

    def test_determinism_under_fixed_seed(self):
        a = run_session(passive_params(channel=qsim.ChannelModel(0.02), seed=77))
        b = run_session(passive_params(channel=qsim.ChannelModel(0.02), seed=77))
        assert a.transcript.serialize() == b.transcript.serialize()
        assert np.array_equal(a.key_a, b.key_a)
        c = run_session(passive_params(channel=qsim.ChannelModel(0.02), seed=78))
        assert a.transcript.serialize() != c.transcript.serialize()

    def test_monte_carlo_completion_and_agreement_low_noise(self):
        # at 1e-3 flip a single pass corrects almost every frame
        agree = 0
        trials = 60
        for i in range(trials):
            out = run_session(
                passive_params(
                    num_signals=1 << 14,
                    qber_threshold=0.05,
                    channel=qsim.ChannelModel(0.001),
                    seed=1000 + i,
                )
            )
            assert out.status == "completed"
            if np.array_equal(out.key_a, out.key_b):
                agree += 1
        assert agree / trials >= 0.90


class TestTranscript:
    def test_replay_is_byte_exact(self):
        out = run_session(passive_params(channel=qsim.ChannelModel(0.01), seed=5))
        blob = out.transcript.serialize()
        replayed = json.loads(blob)
        rebuilt = Transcript()
        for label, payload in replayed:
            rebuilt.append(label, np.asarray(payload) if isinstance(payload, list) else payload)
        assert rebuilt.serialize() == blob
        labels = [label for label, _ in out.transcript.messages]
        assert labels == [
            "alice_bases",
            "bob_bases",
            "sample_indices",
            "alice_sample_bits",
            "bob_sample_bits",
            "helper_data",
            "hash_seed",
            "tag_seed",
            "tag",
        ]

    def test_summary_contains_digest(self):
        out = run_session(passive_params(seed=6))
        summary = out.transcript.summary()
        assert summary["digest"] == out.transcript.digest()
        assert len(summary["messages"]) == 9


class TestValidation:
    def test_missing_lambda_equivalent(self):
        with pytest.raises(ParamError) as err:
            SessionParams(
                num_signals=0, sample_size=1, qber_threshold=0.1
            ).validate()
        assert "lambda" in str(err.value)

    def test_threshold_range(self):
        with pytest.raises(ParamError) as err:
            passive_params(qber_threshold=0.6).validate()
        assert "eta0" in str(err.value)

    def test_sample_size_versus_expected_sifted(self):
        with pytest.raises(ParamError) as err:
            SessionParams(
                num_signals=4096, sample_size=2048, qber_threshold=0.1
            ).validate()
        assert "sample_r" in str(err.value)
