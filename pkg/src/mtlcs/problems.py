"""Boolean benchmark environments.

Families: multiplexer, even-parity, carry-one, majority-on, and
hierarchical compositions whose bottom level is made of successive 3-bit
even-parity blocks feeding a top-level problem.

Conventions (fixed for reproducibility):
  - bit vectors are (D0, D1, ...) tuples of 0/1;
  - multiplexer: the first k bits are the address, D0 most significant;
    the addressed data bit is D(k + address);
  - even-parity outputs 1 iff the number of ones is even;
  - carry-one: D0..D(m-1) is operand A and Dm..D(2m-1) operand B, both
    most-significant-bit first; output 1 iff A + B >= 2**m;
  - majority-on outputs 1 iff strictly more than half the bits are 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

ENUMERATION_LIMIT = 24

FAMILIES = ("multiplexer", "even_parity", "carry_one", "majority_on")

_FAMILY_ALIASES = {
    "mux": "multiplexer",
    "multiplexer": "multiplexer",
    "eparity": "even_parity",
    "even_parity": "even_parity",
    "parity": "even_parity",
    "carry": "carry_one",
    "carry_one": "carry_one",
    "majority": "majority_on",
    "majority_on": "majority_on",
}

_HIERARCHICAL_ALIASES = {
    "hmux": "multiplexer",
    "hmaj": "majority_on",
    "hmajority": "majority_on",
    "hcarry": "carry_one",
    "heparity": "even_parity",
}

BLOCK_SIZE = 3


class ProblemError(ValueError):
    """Invalid problem family or arity."""


@dataclass(frozen=True)
class ProblemSpec:
    """A benchmark environment: a family plus its input arity.

    ``top`` is set only for hierarchical problems and holds the top-level
    problem fed by the 3-bit parity blocks.
    """

    family: str
    arity: int
    top: "ProblemSpec | None" = None

    def __post_init__(self):
        _validate(self)

    @property
    def hierarchical(self) -> bool:
        return self.top is not None

    @property
    def name(self) -> str:
        if self.hierarchical:
            short = {v: k for k, v in _HIERARCHICAL_ALIASES.items()}[self.top.family]
            return f"{short}:{self.arity}"
        short = {"multiplexer": "mux", "even_parity": "eparity",
                 "carry_one": "carry", "majority_on": "majority"}[self.family]
        return f"{short}:{self.arity}"

    def oracle(self, bits: Sequence[int]) -> int:
        if len(bits) != self.arity:
            raise ProblemError(
                f"{self.name} expects {self.arity} bits, got {len(bits)}"
            )
        if self.hierarchical:
            meta = tuple(
                oracle_even_parity(bits[i: i + BLOCK_SIZE])
                for i in range(0, self.arity, BLOCK_SIZE)
            )
            return self.top.oracle(meta)
        return _FLAT_ORACLES[self.family](bits)


def _validate(spec: ProblemSpec) -> None:
    if spec.arity < 1:
        raise ProblemError(f"arity must be positive, got {spec.arity}")
    if spec.top is not None:
        if spec.family != "hierarchical":
            raise ProblemError("only hierarchical specs carry a top-level problem")
        if spec.arity != BLOCK_SIZE * spec.top.arity:
            raise ProblemError(
                f"hierarchical arity {spec.arity} != {BLOCK_SIZE} x top arity {spec.top.arity}"
            )
        return
    if spec.family == "multiplexer":
        if _mux_address_width(spec.arity) is None:
            raise ProblemError(
                f"multiplexer arity must be k + 2**k (3, 6, 11, 20, 37, ...), got {spec.arity}"
            )
    elif spec.family == "carry_one":
        if spec.arity % 2:
            raise ProblemError(f"carry-one arity must be even, got {spec.arity}")
    elif spec.family not in ("even_parity", "majority_on"):
        raise ProblemError(f"unknown family {spec.family!r}")


def _mux_address_width(arity: int) -> int | None:
    k = 1
    while k + (1 << k) <= arity:
        if k + (1 << k) == arity:
            return k
        k += 1
    return None


def oracle_multiplexer(bits: Sequence[int]) -> int:
    k = _mux_address_width(len(bits))
    if k is None:
        raise ProblemError(f"invalid multiplexer arity {len(bits)}")
    address = 0
    for i in range(k):
        address = (address << 1) | (1 if bits[i] else 0)
    return 1 if bits[k + address] else 0


def oracle_even_parity(bits: Sequence[int]) -> int:
    ones = sum(1 for b in bits if b)
    return 1 if ones % 2 == 0 else 0


def oracle_carry_one(bits: Sequence[int]) -> int:
    if len(bits) % 2:
        raise ProblemError(f"carry-one arity must be even, got {len(bits)}")
    m = len(bits) // 2
    a = 0
    b = 0
    for i in range(m):
        a = (a << 1) | (1 if bits[i] else 0)
        b = (b << 1) | (1 if bits[m + i] else 0)
    return 1 if a + b >= (1 << m) else 0


def oracle_majority_on(bits: Sequence[int]) -> int:
    ones = sum(1 for b in bits if b)
    return 1 if 2 * ones > len(bits) else 0


_FLAT_ORACLES = {
    "multiplexer": oracle_multiplexer,
    "even_parity": oracle_even_parity,
    "carry_one": oracle_carry_one,
    "majority_on": oracle_majority_on,
}


def parse_problem(text: str) -> ProblemSpec:
    """Parse a ``family:arity`` config string, e.g. ``hmux:9`` or ``carry:10``."""
    try:
        name, _, arity_text = text.strip().partition(":")
        arity = int(arity_text)
    except ValueError:
        raise ProblemError(f"problem must be written family:arity, got {text!r}") from None
    name = name.strip().lower()
    if name in _HIERARCHICAL_ALIASES:
        if arity % BLOCK_SIZE:
            raise ProblemError(f"hierarchical arity must be a multiple of {BLOCK_SIZE}, got {arity}")
        top = ProblemSpec(_HIERARCHICAL_ALIASES[name], arity // BLOCK_SIZE)
        return ProblemSpec("hierarchical", arity, top)
    if name in _FAMILY_ALIASES:
        return ProblemSpec(_FAMILY_ALIASES[name], arity)
    raise ProblemError(f"unknown problem family {name!r}")


@dataclass(frozen=True)
class Instance:
    bits: tuple[int, ...]
    label: int


def index_to_bits(index: int, arity: int) -> tuple[int, ...]:
    """Bit vector for a state index; bit k of the index is attribute Dk."""
    return tuple((index >> k) & 1 for k in range(arity))


def bits_to_index(bits: Sequence[int]) -> int:
    index = 0
    for k, b in enumerate(bits):
        if b:
            index |= 1 << k
    return index


def sample_instance(spec: ProblemSpec, rng) -> Instance:
    """Uniform labeled instance from {0,1}**arity."""
    index = rng.getrandbits(spec.arity)
    bits = index_to_bits(index, spec.arity)
    return Instance(bits, spec.oracle(bits))


def enumerate_all(spec: ProblemSpec) -> Iterator[Instance]:
    """All 2**arity labeled instances, in state-index order."""
    if spec.arity > ENUMERATION_LIMIT:
        raise ProblemError(
            f"refusing to enumerate 2**{spec.arity} states (limit 2**{ENUMERATION_LIMIT})"
        )
    for index in range(1 << spec.arity):
        bits = index_to_bits(index, spec.arity)
        yield Instance(bits, spec.oracle(bits))


def positive_count(spec: ProblemSpec) -> int:
    """Analytic number of label-1 states, used to cross-check enumeration."""
    n = spec.arity
    if spec.hierarchical:
        top_positive = positive_count(spec.top)
        # every meta-bit value is produced by exactly 4 of the 8 block patterns
        return top_positive * (4 ** spec.top.arity)
    if spec.family in ("multiplexer", "even_parity"):
        return 1 << (n - 1)
    if spec.family == "carry_one":
        m = n // 2
        return (1 << m) * ((1 << m) - 1) // 2
    if spec.family == "majority_on":
        return sum(math.comb(n, k) for k in range(n // 2 + 1, n + 1))
    raise ProblemError(spec.family)
