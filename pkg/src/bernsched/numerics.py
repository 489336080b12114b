"""Exact rational time arithmetic and reproducible random substreams.

All times, sizes and grid points are nonnegative ``fractions.Fraction``
values so that grid membership and load-profile equality are bit-exact.
Probabilities and expected costs are ordinary floats (tolerance 1e-9).
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

#: comparison tolerance for floating-point expected costs
COST_TOL = 1e-9


class NumericsError(ValueError):
    pass


def rat(num, den=1) -> Fraction:
    """Build a nonnegative rational in lowest terms.

    Raises NumericsError on a zero denominator or a negative value.
    """
    if den == 0:
        raise NumericsError("zero denominator")
    f = Fraction(num, den)
    if f < 0:
        raise NumericsError(f"negative rational {num}/{den}")
    return f


def parse_rat(s) -> Fraction:
    """Parse "num/den" or "num" (also accepts ints) into a nonnegative Fraction."""
    if isinstance(s, Fraction):
        f = s
    elif isinstance(s, int):
        f = Fraction(s)
    else:
        f = Fraction(str(s))
    if f < 0:
        raise NumericsError(f"negative rational {s!r}")
    return f


def format_rat(f: Fraction) -> str:
    """Serialize as "num/den", or "num" when the denominator is 1."""
    if f.denominator == 1:
        return str(f.numerator)
    return f"{f.numerator}/{f.denominator}"


def checked_sub(a: Fraction, b: Fraction) -> Fraction:
    if b > a:
        raise NumericsError(f"negative result: {a} - {b}")
    return a - b


def floor_div(a: Fraction, g: Fraction) -> int:
    """Largest integer k with k*g <= a."""
    if g <= 0:
        raise NumericsError("floor_div by nonpositive step")
    return (a.numerator * g.denominator) // (a.denominator * g.numerator)


def ceil_to_multiple_of(a: Fraction, g: Fraction) -> Fraction:
    """Smallest multiple of g that is >= a."""
    if g <= 0:
        raise NumericsError("ceil_to_multiple_of with nonpositive grid")
    q, r = divmod(a.numerator * g.denominator, a.denominator * g.numerator)
    if r:
        q += 1
    return q * g


def divides(g: Fraction, a: Fraction) -> bool:
    """True iff a is an integer multiple of g."""
    if g == 0:
        return a == 0
    return (a / g).denominator == 1


class SeedStream:
    """Deterministic, splittable pseudo-random substream.

    A (master_seed, stream_index) pair identifies an independent Philox
    counter-based stream; Monte Carlo trial i uses stream_index i, so
    trials are reproducible and trivially parallel.
    """

    def __init__(self, master_seed: int, stream_index: int = 0):
        if stream_index < 0:
            raise NumericsError("stream_index must be nonnegative")
        self.master_seed = int(master_seed) & (2**64 - 1)
        self.stream_index = int(stream_index)

    def generator(self) -> np.random.Generator:
        bg = np.random.Philox(key=[self.master_seed, self.stream_index])
        return np.random.Generator(bg)

    def substream(self, index: int) -> "SeedStream":
        return SeedStream(self.master_seed, index)

    def __repr__(self):
        return f"SeedStream({self.master_seed}, {self.stream_index})"
