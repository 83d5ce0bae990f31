"""Certified digit extraction: oracle equality, certification, and sum laws."""

from __future__ import annotations

import random
from fractions import Fraction
from math import gcd

import pytest

from cfrenewal.bits import BitSource
from cfrenewal.exact import (
    DigitStream,
    DyadicInterval,
    LazyReal,
    MobiusState,
    NonGenericPointError,
    StreamExhausted,
    digit_sums,
    digits_of_rational,
    gauss_iteration_oracle,
    geometric_mean,
)


def test_golden_ratio_fixed_point_digits():
    # (sqrt(5)-1)/2 satisfies x = 1/(1+x); seed a state converging there via
    # the constant continued fraction [1,1,1,...]: after emitting, the state
    # must keep producing ones.  Model it as the exact interval fixed point.
    stream = DigitStream.constant(1)
    assert [stream.digit(k) for k in range(1, 8)] == [1] * 7
    assert stream.partial_sum(5) == 5
    assert stream.trimmed_sum(5) == 4


def test_sqrt2_minus_one_digits_all_twos():
    stream = DigitStream.constant(2)
    assert [stream.digit(k) for k in range(1, 6)] == [2] * 5


def test_rational_digits_match_spec_cases():
    assert _digits(digits_of_rational(3, 7)) == [2, 3]
    assert _digits(digits_of_rational(1, 4)) == [4]
    assert _digits(digits_of_rational(113, 355), 3) == [3, 7, 16]


def _digits(stream: DigitStream, count: int | None = None) -> list[int]:
    out = []
    k = 1
    while count is None or len(out) < count:
        if not stream.ensure(k):
            break
        out.append(stream.digit(k))
        k += 1
    return out


def test_rational_rejects_bad_inputs():
    with pytest.raises(ValueError):
        digits_of_rational(7, 3)
    with pytest.raises(ValueError):
        digits_of_rational(2, 4)
    with pytest.raises(ValueError):
        digits_of_rational(0, 5)


def test_cross_oracle_first_digits_many_seeds():
    # certified digits must agree with the independent 4096-bit fixed-point
    # Gauss iteration on the same bit prefix
    for seed in range(1000):
        real = LazyReal(BitSource(seed, 0))
        certified = [real.next_digit() for _ in range(100)]
        prefix = BitSource(seed, 0).next_bits(4096)
        assert certified == gauss_iteration_oracle(prefix, 4096, 100)


def test_certification_independent_of_refine_cap():
    for seed in (3, 17, 91):
        a = LazyReal(BitSource(seed, 2), refine_cap=512)
        b = LazyReal(BitSource(seed, 2), refine_cap=4096)
        assert [a.next_digit() for _ in range(200)] == [b.next_digit() for _ in range(200)]


def test_euclid_consistency_with_lazy_constant_states():
    rng = random.Random(1)
    for _ in range(1000):
        q = rng.randrange(3, 10**6)
        p = rng.randrange(1, q)
        g = gcd(p, q)
        p, q = p // g, q // g
        if p == 0 or p == q:
            continue
        euclid = _digits(digits_of_rational(p, q))
        lazy = LazyReal(BitSource(0, 0), state=MobiusState.constant(Fraction(p, q)))
        got = []
        try:
            for _ in range(len(euclid)):
                got.append(lazy.next_digit())
        except StreamExhausted:
            pass
        assert got == euclid


def test_interval_monotonicity_under_absorption():
    src = BitSource(8, 0)
    st = MobiusState.identity()
    prev_lo, prev_hi = st.interval()
    for _ in range(200):
        st.absorb(src.next_bit())
        lo, hi = st.interval()
        assert prev_lo <= lo and hi <= prev_hi
        prev_lo, prev_hi = lo, hi


def test_emit_maps_interval_through_gauss_step():
    src = BitSource(21, 0)
    st = MobiusState.identity()
    for _ in range(30):
        digit = st.determined_digit()
        while digit is None:
            prev = st.interval()
            st.absorb(src.next_bit())
            lo, hi = st.interval()
            assert prev[0] <= lo and hi <= prev[1]
            digit = st.determined_digit()
        # at emission both endpoints are positive and share the digit
        blo, bhi = st.interval()
        assert blo > 0
        st.emit(digit)
        lo, hi = st.interval()
        assert lo == 1 / bhi - digit
        assert hi == 1 / blo - digit


def test_digit_sum_law_exact_integers():
    stream = DigitStream.from_seed(77, 0)
    sums = digit_sums(stream, 500)
    assert sums[0] == stream.digit(1)
    for k in range(2, 501):
        assert sums[k - 1] - sums[k - 2] == stream.digit(k)
        assert sums[k - 1] >= k


def test_digit_sums_reproducible_from_scratch():
    first = digit_sums(DigitStream.from_seed(123, 9), 2000)
    second = digit_sums(DigitStream.from_seed(123, 9), 2000)
    assert first == second


def test_trimmed_sum_examples():
    ones = DigitStream.constant(1)
    assert ones.trimmed_sum(5) == 4
    two_three = DigitStream.from_digits([2, 3])
    assert digit_sums(two_three, 2) == [2, 5]
    assert two_three.trimmed_sum(2) == 2


def test_geometric_mean_constants():
    assert geometric_mean(DigitStream.constant(1), 100) == pytest.approx(1.0)
    assert geometric_mean(DigitStream.constant(2), 100) == pytest.approx(2.0)


def test_nongeneric_point_detected_for_all_zero_bits():
    class ZeroSource(BitSource):
        def next_bit(self):
            self.position += 1
            return 0

    real = LazyReal(ZeroSource(0, 0), refine_cap=256)
    with pytest.raises(NonGenericPointError):
        real.next_digit()


def test_dyadic_interval_refinement():
    dy = DyadicInterval(0, 0)
    dy1 = dy.refine(1)
    assert dy1 == DyadicInterval(1, 1)
    assert dy.contains(dy1)
    assert dy1.lower == Fraction(1, 2) and dy1.upper == Fraction(1, 1)
    with pytest.raises(ValueError):
        DyadicInterval(4, 2)


def test_lazy_real_tracks_dyadic_prefix():
    real = LazyReal(BitSource(5, 0), track_prefix=True)
    for _ in range(20):
        real.next_digit()
    dy = real.dyadic
    assert dy is not None
    assert dy.exponent == real.bits_consumed
    replay = BitSource(5, 0)
    assert dy.numerator == replay.next_bits(dy.exponent)


def test_mobius_state_normalizes_gcd():
    st = MobiusState(2, 4, 0, 8)
    assert (st.a, st.b, st.c, st.d) == (1, 2, 0, 4)


def test_stream_rejects_invalid_digits():
    with pytest.raises(ValueError):
        DigitStream.from_digits([0]).digit(1)


def test_digit_overflow_is_a_typed_error():
    from cfrenewal.exact import DigitOverflowError

    huge = LazyReal(BitSource(0, 0), state=MobiusState.constant(Fraction(1, 2**63 + 5)))
    with pytest.raises(DigitOverflowError):
        huge.next_digit()
    stream = DigitStream.from_digits([2**63 - 1, 5])
    stream.digit(1)
    with pytest.raises(DigitOverflowError):
        stream.digit(2)
