"""Compile a deterministic Turing machine into a two-stack automaton.

The tape is split at the head: stack X holds the cells left of the head (top =
nearest cell), stack Y holds the head cell and everything to its right (top =
head cell).  Both stacks sit on a sentinel symbol, so running off the written
part of the tape reads a blank without popping an empty stack.

Layout conventions (vertex count = path length):

* ``v1 -> push x_S -> push y_S -> q0``: the empty tape.
* every state is an eps vertex; a transition is a short gadget of stack
  vertices ending at the next state's vertex.  eps buffers separate two
  consecutive operations on the same stack.
* the halt state drains X down to its sentinel, then Y, then enters ``v2``.

A halting run therefore gives exactly one balanced ``v1 -> v2`` path; a
machine that never halts gives none.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .automaton import EPS, Automaton, StackLabel
from .errors import InputError


@dataclass(frozen=True)
class TuringMachine:
    states: tuple
    start: str
    halt: str
    blank: str
    delta: dict  # (state, symbol) -> (state, symbol, "L" | "R")

    @classmethod
    def from_dict(cls, data: dict) -> "TuringMachine":
        try:
            states = tuple(str(s) for s in data["states"])
            delta = {}
            for q, a, q2, b, mv in data["delta"]:
                key = (str(q), str(a))
                if key in delta:
                    raise InputError(f"two transitions for {key}")
                delta[key] = (str(q2), str(b), str(mv).upper())
            tm = cls(states, str(data["start"]), str(data["halt"]), str(data.get("blank", "_")),
                     delta)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed machine: {exc}") from exc
        problems = tm.problems()
        if problems:
            raise InputError("; ".join(problems))
        return tm

    def to_dict(self) -> dict:
        return {
            "states": list(self.states), "start": self.start, "halt": self.halt,
            "blank": self.blank,
            "delta": [[q, a, q2, b, mv] for (q, a), (q2, b, mv) in sorted(self.delta.items())],
        }

    def problems(self) -> list:
        out = []
        known = set(self.states)
        for name in (self.start, self.halt):
            if name not in known:
                out.append(f"state {name!r} is not declared")
        for (q, a), (q2, b, mv) in self.delta.items():
            if q not in known or q2 not in known:
                out.append(f"transition {(q, a)} uses an undeclared state")
            if q == self.halt:
                out.append("the halt state has an outgoing transition")
            if mv not in ("L", "R"):
                out.append(f"move {mv!r} is not L or R")
        return out

    @property
    def symbols(self) -> tuple:
        """Tape alphabet with the blank first (so the blank gets index 0)."""
        rest = set()
        for (q, a), (q2, b, mv) in self.delta.items():
            rest.update((a, b))
        rest.discard(self.blank)
        return (self.blank,) + tuple(sorted(rest))

    def run(self, max_steps: int) -> Optional[int]:
        """Number of steps until the halt state, or None if not within ``max_steps``."""
        trace = self.trace(max_steps)
        return None if trace is None else len(trace)

    def trace(self, max_steps: int) -> Optional[list]:
        """The sequence of (state, read, head position, tape) before every step."""
        tape = {}
        pos = 0
        q = self.start
        out = []
        while q != self.halt:
            if len(out) >= max_steps:
                return None
            a = tape.get(pos, self.blank)
            if (q, a) not in self.delta:
                return None  # stuck: no halting computation
            q2, b, mv = self.delta[(q, a)]
            out.append((q, a, pos, dict(tape)))
            tape[pos] = b
            pos += 1 if mv == "R" else -1
            q = q2
        return out


def load_machine(path) -> TuringMachine:
    with open(path) as fh:
        try:
            return TuringMachine.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from exc


def _x(i, push):
    return StackLabel("x", push, i)


def _y(i, push):
    return StackLabel("y", push, i)


class _Builder:
    def __init__(self):
        self.vertices = []
        self.edges = []
        self.count = 0

    def vertex(self, name, label):
        self.vertices.append((name, label))
        return name

    def fresh(self, tag, label):
        self.count += 1
        return self.vertex(f"g{self.count}:{tag}", label)

    def chain(self, start, labels, end, tag):
        """start -> new vertices with ``labels`` -> end; returns the new vertex ids."""
        prev = start
        made = []
        for lab in labels:
            v = self.fresh(tag, lab)
            self.edges.append((prev, v))
            made.append(v)
            prev = v
        self.edges.append((prev, end))
        return made


def state_vertex(q: str) -> str:
    return f"q:{q}"


def compile_machine(tm: TuringMachine) -> Automaton:
    """Build the two-stack automaton simulating ``tm`` on a blank tape."""
    syms = tm.symbols
    idx = {s: i for i, s in enumerate(syms)}
    S = len(syms)  # sentinel index
    b = _Builder()
    b.vertex("v1", EPS)
    b.vertex("v2", EPS)
    for q in tm.states:
        b.vertex(state_vertex(q), EPS)
    b.chain("v1", [_x(S, True), _y(S, True)], state_vertex(tm.start), "init")

    for (q, a), (q2, w, mv) in sorted(tm.delta.items()):
        src, dst = state_vertex(q), state_vertex(q2)
        ai, wi = idx[a], idx[w]
        tag = f"{q},{a}"
        # the head cell is either an explicit symbol or, for a blank, the sentinel
        reads = [(False, ai)] + ([(True, S)] if ai == 0 else [])
        for past_end, top in reads:
            if mv == "R":
                labels = [_y(top, False), _x(wi, True)]
                if past_end:
                    labels.append(_y(S, True))
                b.chain(src, labels, dst, tag + ",R")
                continue
            # moving left: write w onto Y, then bring the left neighbour over
            if past_end:
                head = [_y(S, False), EPS, _y(S, True), EPS, _y(wi, True)]
            else:
                head = [_y(top, False), EPS, _y(wi, True)]
            made = b.chain(src, head, dst, tag + ",L")
            b.edges.pop()  # the branch on the left neighbour replaces the direct edge
            hub = made[-1]
            for c in range(S):
                b.chain(hub, [_x(c, False), _y(c, True)], dst, tag + f",L{c}")
            b.chain(hub, [_x(S, False), _y(0, True), _x(S, True)], dst, tag + ",Ledge")

    h = state_vertex(tm.halt)
    for c in range(S):
        b.chain(h, [_x(c, False)], h, f"drainx{c}")
    d = b.vertex("drain-y", EPS)
    b.chain(h, [_x(S, False)], d, "endx")
    for c in range(S):
        b.chain(d, [_y(c, False)], d, f"drainy{c}")
    b.chain(d, [_y(S, False)], "v2", "endy")
    return Automaton(tuple(b.vertices), tuple(b.edges), "v1", "v2")


def halting_path_length(tm: TuringMachine, max_steps: int) -> Optional[int]:
    """Length of the unique balanced path, from a direct simulation of the gadgets."""
    trace = tm.trace(max_steps)
    if trace is None:
        return None
    n = 4  # v1, push x_S, push y_S, start state
    pos = 0
    lo = hi = 0  # cells [lo, hi) are on the stacks as explicit symbols
    for q, a, p, tape in trace:
        q2, w, mv = tm.delta[(q, a)]
        past_end = p >= hi
        if mv == "R":
            n += 2 + past_end + 1
            if past_end:
                hi = p + 1
        else:
            n += (5 if past_end else 3)
            if past_end:
                hi = p + 1
            n += 3 if p - 1 < lo else 2
            if p - 1 < lo:
                lo = p - 1
            n += 1
        pos = p + (1 if mv == "R" else -1)
    # drain: explicit cells left of the head, then from the head rightwards
    left = pos - lo
    right = hi - pos if hi > pos else 0
    n += 2 * left + 2 + 2 * right + 2
    return n
