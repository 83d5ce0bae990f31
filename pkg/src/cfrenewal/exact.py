"""Certified continued-fraction digit extraction.

A lazily refined real is a shrinking dyadic interval fed by a seeded bit
stream, composed with an integer Mobius map that tracks where the remaining
(unread) tail of the number currently lives.  A digit is emitted only once
the integer part of the reciprocal is constant on the whole image interval,
so every emitted digit is valid for every real consistent with the bits
consumed so far.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from math import exp, gcd, log
from typing import Iterable, Iterator, Optional

from .bits import BitSource

_DIGIT_LIMIT = 1 << 63  # checked-arithmetic bound for digit values and sums

DEFAULT_REFINE_CAP = 512


class NonGenericPointError(Exception):
    """Raised when a digit (or a branch) stays undetermined past the refinement cap.

    Signals a measure-zero point (rational or branch boundary) under the
    supplied bit stream rather than a generic sampling outcome.
    """


class StreamExhausted(Exception):
    """Raised when a finite (rational) digit stream has no further digits."""


class DigitOverflowError(Exception):
    """Raised when a digit or digit sum exceeds the 64-bit checked range."""


@dataclass(frozen=True)
class DyadicInterval:
    """The interval [p/2^B, (p+1)/2^B] holding all reals consistent with B bits."""

    numerator: int
    exponent: int

    def __post_init__(self):
        if not 0 <= self.numerator < (1 << self.exponent) or self.exponent < 0:
            raise ValueError("need 0 <= p < 2^B with B >= 0")

    def refine(self, bit: int) -> "DyadicInterval":
        return DyadicInterval(2 * self.numerator + bit, self.exponent + 1)

    @property
    def lower(self) -> Fraction:
        return Fraction(self.numerator, 1 << self.exponent)

    @property
    def upper(self) -> Fraction:
        return Fraction(self.numerator + 1, 1 << self.exponent)

    def contains(self, other: "DyadicInterval") -> bool:
        return self.lower <= other.lower and other.upper <= self.upper


class MobiusState:
    """Integer map y -> (a*y + b)/(c*y + d) applied to the unread tail y in [0,1].

    Invariants kept by the update methods: the denominator is positive on
    [0, 1] and the four entries have no common factor.
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: int, b: int, c: int, d: int):
        if d <= 0 or c + d <= 0:
            raise ValueError("denominator must be positive on [0, 1]")
        self.a, self.b, self.c, self.d = a, b, c, d
        self.normalize()

    @classmethod
    def identity(cls) -> "MobiusState":
        return cls(1, 0, 0, 1)

    @classmethod
    def constant(cls, value: Fraction) -> "MobiusState":
        """State whose image is the single point ``value`` regardless of the tail."""
        return cls(0, value.numerator, 0, value.denominator)

    def normalize(self) -> None:
        g = gcd(gcd(abs(self.a), abs(self.b)), gcd(abs(self.c), abs(self.d)))
        if g > 1:
            self.a //= g
            self.b //= g
            self.c //= g
            self.d //= g

    def endpoints(self) -> tuple[Fraction, Fraction]:
        """Values at y = 0 and y = 1 (the image interval hull, unordered)."""
        return Fraction(self.b, self.d), Fraction(self.a + self.b, self.c + self.d)

    def interval(self) -> tuple[Fraction, Fraction]:
        lo, hi = self.endpoints()
        return (lo, hi) if lo <= hi else (hi, lo)

    def absorb(self, bit: int) -> None:
        """Consume one tail bit: y = (bit + y')/2."""
        if bit:
            self.b = self.a + 2 * self.b
            self.d = self.c + 2 * self.d
        else:
            self.b = 2 * self.b
            self.d = 2 * self.d

    def determined_digit(self) -> Optional[int]:
        """The common integer part of 1/xi on the image interval, if constant."""
        b, ab = self.b, self.a + self.b
        if b <= 0 or ab <= 0:
            return None
        m = self.d // b
        if m < 1:
            return None
        t = (self.c + self.d) - m * ab
        if 0 <= t < ab:
            return m
        return None

    def emit(self, digit: int) -> None:
        """Apply xi -> 1/xi - digit on top of the current state."""
        self.a, self.b, self.c, self.d = (
            self.c - digit * self.a,
            self.d - digit * self.b,
            self.a,
            self.b,
        )
        self.normalize()

    def is_exhausted(self) -> bool:
        """True when the image has collapsed to the single point 0."""
        return self.a == 0 and self.b == 0

    def copy(self) -> "MobiusState":
        out = MobiusState.__new__(MobiusState)
        out.a, out.b, out.c, out.d = self.a, self.b, self.c, self.d
        return out


class LazyReal:
    """A Lebesgue-random real in (0, 1) with certified continued-fraction digits.

    ``next_digit`` absorbs bits until the next digit is determined on the
    whole image interval, then composes the Gauss step into the state.  The
    per-digit refinement cap turns measure-zero pathologies into
    :class:`NonGenericPointError`.
    """

    __slots__ = ("source", "state", "refine_cap", "bits_consumed", "digits_emitted", "_prefix")

    def __init__(
        self,
        source: BitSource,
        refine_cap: int = DEFAULT_REFINE_CAP,
        state: Optional[MobiusState] = None,
        track_prefix: bool = False,
    ):
        self.source = source
        self.state = MobiusState.identity() if state is None else state
        self.refine_cap = refine_cap
        self.bits_consumed = 0
        self.digits_emitted = 0
        self._prefix = 0 if track_prefix else None

    @property
    def dyadic(self) -> Optional[DyadicInterval]:
        """Consumed-bit interval, when prefix tracking is enabled."""
        if self._prefix is None:
            return None
        return DyadicInterval(self._prefix, self.bits_consumed)

    def next_digit(self) -> int:
        st = self.state
        a, b, c, d = st.a, st.b, st.c, st.d
        src = self.source
        cap = self.refine_cap
        absorbed = 0
        while True:
            ab = a + b
            if b > 0 and ab > 0:
                m = d // b
                if m >= 1:
                    t = (c + d) - m * ab
                    if 0 <= t < ab:
                        break
            elif a == 0 and b == 0:
                st.a, st.b, st.c, st.d = a, b, c, d
                raise StreamExhausted("image collapsed to 0; no further digits")
            if absorbed >= cap:
                st.a, st.b, st.c, st.d = a, b, c, d
                raise NonGenericPointError(
                    f"digit undetermined after {absorbed} refinement bits "
                    f"(stream {src.stream_index}, digit {self.digits_emitted + 1})"
                )
            bit = src.next_bit()
            if bit:
                b = a + 2 * b
                d = c + 2 * d
            else:
                b = 2 * b
                d = 2 * d
            absorbed += 1
            if self._prefix is not None:
                self._prefix = 2 * self._prefix + bit
        if m >= _DIGIT_LIMIT:
            raise DigitOverflowError(f"digit {m} exceeds the 64-bit checked range")
        # Gauss step xi -> 1/xi - m composed into the state
        a, b, c, d = c - m * a, d - m * b, a, b
        g = gcd(gcd(a, b), gcd(c, d))
        if g > 1:
            a //= g
            b //= g
            c //= g
            d //= g
        st.a, st.b, st.c, st.d = a, b, c, d
        self.bits_consumed += absorbed
        self.digits_emitted += 1
        return m

    def digits(self) -> Iterator[int]:
        """Infinite digit iterator; stops on :class:`StreamExhausted` only."""
        while True:
            try:
                yield self.next_digit()
            except StreamExhausted:
                return


class DigitStream:
    """Digit sequence with running sums, prefix maxima, and lazy extension.

    Wraps any digit iterator (certified, rational, sampled, or injected) and
    memoizes digits a_k, sums S_k = a_1 + ... + a_k, and running maxima so
    that trimmed sums and fluctuation queries are O(1) after extension.
    """

    def __init__(self, digit_iter: Iterable[int], finite: bool = False):
        self._iter = iter(digit_iter)
        self._digits: list[int] = []
        self._sums: list[int] = [0]
        self._prefix_max: list[int] = [0]
        self.finite = finite
        self.exhausted = False

    @classmethod
    def from_lazy(cls, real: LazyReal) -> "DigitStream":
        return cls(real.digits(), finite=False)

    @classmethod
    def from_seed(
        cls,
        master_seed: int,
        stream_index: int = 0,
        refine_cap: int = DEFAULT_REFINE_CAP,
    ) -> "DigitStream":
        return cls.from_lazy(LazyReal(BitSource(master_seed, stream_index), refine_cap))

    @classmethod
    def from_digits(cls, digits: Iterable[int], finite: bool = True) -> "DigitStream":
        return cls(digits, finite=finite)

    @classmethod
    def constant(cls, digit: int) -> "DigitStream":
        def forever():
            while True:
                yield digit

        return cls(forever(), finite=False)

    def _pull(self) -> bool:
        if self.exhausted:
            return False
        try:
            a = next(self._iter)
        except (StopIteration, StreamExhausted):
            self.exhausted = True
            return False
        if a < 1:
            raise ValueError(f"continued-fraction digits must be >= 1, got {a}")
        s = self._sums[-1] + a
        if s >= _DIGIT_LIMIT:
            raise DigitOverflowError("digit sum exceeds the 64-bit checked range")
        self._digits.append(a)
        self._sums.append(s)
        prev = self._prefix_max[-1]
        self._prefix_max.append(a if a > prev else prev)
        return True

    def ensure(self, count: int) -> bool:
        """Extend to at least ``count`` digits; False if the stream ends first."""
        while len(self._digits) < count:
            if not self._pull():
                return False
        return True

    def __len__(self) -> int:
        return len(self._digits)

    def digit(self, k: int) -> int:
        """a_k, 1-indexed."""
        if not self.ensure(k):
            raise StreamExhausted(f"stream ended before digit {k}")
        return self._digits[k - 1]

    def partial_sum(self, k: int) -> int:
        """S_k = a_1 + ... + a_k, with S_0 = 0."""
        if k == 0:
            return 0
        if not self.ensure(k):
            raise StreamExhausted(f"stream ended before digit {k}")
        return self._sums[k]

    def prefix_max(self, k: int) -> int:
        if not self.ensure(k):
            raise StreamExhausted(f"stream ended before digit {k}")
        return self._prefix_max[k]

    def trimmed_sum(self, k: int) -> int:
        """S_k minus the largest digit among the first k."""
        return self.partial_sum(k) - self.prefix_max(k)

    @property
    def max_digit(self) -> int:
        return self._prefix_max[-1]

    def index_exceeding(self, n: int) -> Optional[int]:
        """Smallest k with S_k > n, or None if the stream ends first."""
        while self._sums[-1] <= n:
            if not self._pull():
                return None
        # the stream may already extend past n from an earlier larger query
        return bisect_right(self._sums, n)


def digits_of_rational(p: int, q: int, max_digits: Optional[int] = None) -> DigitStream:
    """Terminating digit stream of p/q in (0, 1) via the Euclidean algorithm."""
    if not 0 < p < q:
        raise ValueError("need 0 < p < q (a rational strictly inside (0, 1))")
    if gcd(p, q) != 1:
        raise ValueError("p/q must be in lowest terms")
    digits = []
    while p > 0 and (max_digits is None or len(digits) < max_digits):
        m, r = divmod(q, p)
        digits.append(m)
        q, p = p, r
    return DigitStream.from_digits(digits)


def digit_sums(stream: DigitStream, n: int) -> list[int]:
    """The exact prefix sums S_1 .. S_n."""
    if not stream.ensure(n):
        raise StreamExhausted(f"stream ended before digit {n}")
    return [stream.partial_sum(k) for k in range(1, n + 1)]


def geometric_mean(stream: DigitStream, n: int) -> float:
    """exp((1/n) * sum(log a_k)), accumulated in log space."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not stream.ensure(n):
        raise StreamExhausted(f"stream ended before digit {n}")
    total = 0.0
    for k in range(1, n + 1):
        total += log(stream.digit(k))
    return exp(total / n)


def gauss_iteration_oracle(prefix: int, bits: int, count: int, precision: int = 4096) -> list[int]:
    """Digits of the dyadic rational prefix/2^bits by fixed-point Gauss iteration.

    Independent oracle for cross-checking certified extraction: the value is
    scaled to ``precision`` fractional bits and the Gauss map is iterated
    with plain integer arithmetic.  Truncation loses roughly two bits of
    accuracy per digit, so ``count`` must stay well below precision/2.
    """
    if bits > precision:
        raise ValueError("oracle precision must cover the consumed bits")
    y = prefix << (precision - bits)
    one = 1 << precision
    digits = []
    for _ in range(count):
        if y == 0:
            break
        m = one // y
        # y' = 1/y - m at fixed point: floor(2^(2P)/Y) - m*2^P
        y = (one * one) // y - m * one
        digits.append(m)
    return digits
