"""Exact evaluation of P-recursive sequences and a subword scanner for their parities.

A recurrence ``q0(n) a_n + q1(n) a_{n-1} + ... + qk(n) a_{n-k} = 0`` is given
by integer coefficient lists (ascending degree) and the seeds a_1 .. a_k.
Indices start at 1.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Optional

from .errors import InputError, NonIntegral, SingularStep


def _poly(coeffs, n):
    out = 0
    for c in reversed(coeffs):
        out = out * n + c
    return out


@dataclass(frozen=True)
class PolyRecurrence:
    coeffs: tuple  # (q0, q1, ..., qk), each a tuple of ints
    seeds: tuple   # (a_1, ..., a_k)

    def __post_init__(self):
        coeffs = tuple(tuple(int(c) for c in q) for q in self.coeffs)
        seeds = tuple(int(s) for s in self.seeds)
        if len(coeffs) < 2:
            raise InputError("need at least q0 and q1")
        if not any(coeffs[0]):
            raise InputError("q0 is the zero polynomial")
        if len(seeds) != len(coeffs) - 1:
            raise InputError(f"order {len(coeffs) - 1} needs {len(coeffs) - 1} seeds, got {len(seeds)}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "seeds", seeds)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_dict(cls, data: dict) -> "PolyRecurrence":
        try:
            return cls(tuple(map(tuple, data["coeffs"])), tuple(data["seeds"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed recurrence: {exc}") from exc

    def to_dict(self) -> dict:
        return {"coeffs": [list(q) for q in self.coeffs], "seeds": list(self.seeds)}


def load_recurrence(path) -> PolyRecurrence:
    with open(path) as fh:
        try:
            return PolyRecurrence.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from exc


def catalan_recurrence() -> PolyRecurrence:
    """(n + 1) a_n - (4n - 2) a_{n-1} = 0 with a_1 = 1."""
    return PolyRecurrence(((1, 1), (2, -4)), (1,))


def factorial_recurrence() -> PolyRecurrence:
    return PolyRecurrence(((1,), (0, -1)), (1,))


def evaluate(rec: PolyRecurrence, upto: int) -> list:
    """[a_1, ..., a_upto] with an exact divisibility check at every step."""
    k = rec.order
    if upto < k:
        raise InputError(f"upto = {upto} is below the order {k}")
    a = list(rec.seeds)
    for n in range(k + 1, upto + 1):
        q0 = _poly(rec.coeffs[0], n)
        if q0 == 0:
            raise SingularStep(n)
        rhs = -sum(_poly(rec.coeffs[i], n) * a[n - i - 1] for i in range(1, k + 1))
        quot, rem = divmod(rhs, q0)
        if rem:
            raise NonIntegral(n, rhs, q0)
        a.append(quot)
    return a


def mod2_word(rec: PolyRecurrence, upto: int) -> str:
    return "".join(str(x & 1) for x in evaluate(rec, upto))


def factors(word: str, length: int) -> set:
    return {word[i:i + length] for i in range(len(word) - length + 1)}


def missing_subword(word: str, maxlen: int) -> Optional[str]:
    """Shortest binary word of length <= maxlen absent from ``word``; None if all occur.

    Ties at one length go to the lexicographically smallest word.
    """
    if set(word) - {"0", "1"}:
        raise InputError("word must consist of 0 and 1")
    for length in range(1, maxlen + 1):
        seen = factors(word, length)
        if len(seen) == 2 ** length:
            continue
        for bits in itertools.product("01", repeat=length):
            cand = "".join(bits)
            if cand not in seen:
                return cand
    return None
