"""Shoreline protection scenarios and the standard scenario sets.

A protection scenario assigns one bit per coastal segment: 1 means a
seawall is installed on that segment, 0 means it is left open. Scenarios
travel as bare bitstrings (segment 0 first) in files, CLI arguments and
HTTP payloads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ProtectionScenario",
    "ScenarioError",
    "parse_scenario",
    "make_base_scenarios",
    "holdout_scenarios",
    "random_scenarios",
    "HOLDOUT_D_X",
]


class ScenarioError(ValueError):
    """Invalid scenario text or an infeasible scenario request."""


@dataclass(frozen=True)
class ProtectionScenario:
    """Binary protection decision for each of ``d_x`` coastal segments."""

    bits: tuple[bool, ...]

    def __post_init__(self):
        if len(self.bits) < 1:
            raise ScenarioError("a scenario needs at least one segment")

    @property
    def d_x(self) -> int:
        return len(self.bits)

    def as_bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def as_array(self) -> np.ndarray:
        """Float vector view, protected segments as 1.0."""
        return np.asarray(self.bits, dtype=np.float64)

    def protected(self, segment_id: int) -> bool:
        return self.bits[segment_id]

    def __str__(self) -> str:
        return self.as_bitstring()


def parse_scenario(text: str) -> ProtectionScenario:
    """Parse a bitstring such as ``"10110"`` into a scenario.

    Raises ScenarioError naming the first offending character index if
    the text contains anything but '0' and '1', or is empty.
    """
    if len(text) == 0:
        raise ScenarioError("empty scenario bitstring")
    for i, ch in enumerate(text):
        if ch not in "01":
            raise ScenarioError(f"invalid character {ch!r} at index {i}: scenario bitstrings contain only '0' and '1'")
    return ProtectionScenario(tuple(ch == "1" for ch in text))


def _from_ints(values, d_x: int) -> list[ProtectionScenario]:
    out = []
    for v in values:
        bits = tuple(bool((v >> (d_x - 1 - i)) & 1) for i in range(d_x))
        out.append(ProtectionScenario(bits))
    return out


def make_base_scenarios(d_x: int, dedup: bool = False) -> list[ProtectionScenario]:
    """Hand-picked scenario set: 4 + 2*d_x entries.

    Order: all ones, first half protected (leading ceil(d_x/2) bits),
    second half protected, all zeros, the d_x unit vectors, then their
    complements. With ``dedup`` exact duplicates (possible for tiny d_x)
    are dropped, keeping first occurrences.
    """
    if d_x < 1:
        raise ScenarioError("d_x must be >= 1")
    half = math.ceil(d_x / 2)
    rows: list[tuple[bool, ...]] = [
        tuple([True] * d_x),
        tuple([True] * half + [False] * (d_x - half)),
        tuple([False] * half + [True] * (d_x - half)),
        tuple([False] * d_x),
    ]
    for i in range(d_x):
        rows.append(tuple(j == i for j in range(d_x)))
    for i in range(d_x):
        rows.append(tuple(j != i for j in range(d_x)))
    scenarios = [ProtectionScenario(r) for r in rows]
    if dedup:
        seen: set[tuple[bool, ...]] = set()
        unique = []
        for s in scenarios:
            if s.bits not in seen:
                seen.add(s.bits)
                unique.append(s)
        return unique
    return scenarios


# The 32 handcrafted holdout scenarios for the 17-segment coastline, in
# row-major table order. Data, not generated.
_HOLDOUT_BITSTRINGS = (
    "00110011001100110", "11100000000000111", "00000111100000111", "00011000110001100", "11110000111100001",
    "00000011111100000", "11110000000001111", "00000111111100000", "11111100000111111", "00001111111110000",
    "11111000001111100", "00001110000111000", "10101010101010101", "11111110000001111", "00000001111110000",
    "11111000000011111", "11111110000000111", "00000111110000011", "00011100011100011", "00000001111111000",
    "11000000000000011", "00111111111111100", "01010101010101010", "11111100000011111", "11111000011111000",
    "00000011111000000", "11110001111000111", "11100011100011100", "00001111000011110", "11001100110011001",
    "11100111001110011", "00011111111111000",
)

HOLDOUT_D_X = 17


def holdout_scenarios() -> list[ProtectionScenario]:
    """The fixed 32-scenario holdout set (17 segments each)."""
    return [parse_scenario(s) for s in _HOLDOUT_BITSTRINGS]


def random_scenarios(
    count: int,
    d_x: int,
    seed: int,
    exclusions: set[ProtectionScenario] | frozenset[ProtectionScenario] = frozenset(),
) -> list[ProtectionScenario]:
    """Draw ``count`` distinct scenarios uniformly without replacement.

    Excluded scenarios are never returned. Deterministic for a given
    (count, d_x, seed, exclusions) tuple.
    """
    if count < 0:
        raise ScenarioError("count must be >= 0")
    excluded_ints = set()
    for s in exclusions:
        if s.d_x != d_x:
            continue
        excluded_ints.add(int(s.as_bitstring(), 2))
    capacity = (1 << d_x) - len(excluded_ints)
    if count > capacity:
        raise ScenarioError(f"requested {count} scenarios but only {capacity} distinct ones exist outside the exclusion set")
    rng = np.random.default_rng(seed)
    if count == 0:
        return []
    space = 1 << d_x
    if space <= (1 << 22):
        pool = [v for v in range(space) if v not in excluded_ints]
        chosen = rng.choice(len(pool), size=count, replace=False)
        return _from_ints([pool[int(i)] for i in chosen], d_x)
    # Space too large to enumerate: rejection-sample distinct draws.
    seen = set(excluded_ints)
    picks: list[int] = []
    while len(picks) < count:
        bits = rng.integers(0, 2, size=d_x)
        v = 0
        for b in bits:
            v = (v << 1) | int(b)
        if v in seen:
            continue
        seen.add(v)
        picks.append(v)
    return _from_ints(picks, d_x)
