"""Two-stack automata: vertex-labelled digraphs, balanced paths, and G(Gamma, n).

A vertex label is either ``eps`` or a stack operation on stack X or Y.  Walking a
path pushes and pops symbols; the path is *balanced* when every pop matches the
top of its stack and both stacks are empty at the end.  Path length is the
number of vertices throughout.
"""

from __future__ import annotations

import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterator, Optional, Sequence

from .errors import BudgetExceeded, InputError, InvalidPath

DEFAULT_BUDGET = 10**7

_LABEL_RE = re.compile(r"^([xy])([+-])(\d+)$")


@dataclass(frozen=True, order=True)
class StackLabel:
    """``eps`` or a push/pop of symbol ``index`` on stack ``'x'`` or ``'y'``."""

    stack: Optional[str] = None
    push: bool = False
    index: Optional[int] = None

    def __post_init__(self):
        if self.stack is None:
            if self.index is not None or self.push:
                raise InputError("eps label carries no index")
        elif self.stack not in ("x", "y") or self.index is None or self.index < 0:
            raise InputError(f"bad stack label {self!r}")

    @classmethod
    def parse(cls, text: str) -> "StackLabel":
        text = text.strip()
        if text == "eps":
            return EPS
        m = _LABEL_RE.match(text)
        if not m:
            raise InputError(f"cannot parse label {text!r}")
        return cls(m.group(1), m.group(2) == "+", int(m.group(3)))

    def __str__(self):
        if self.stack is None:
            return "eps"
        return f"{self.stack}{'+' if self.push else '-'}{self.index}"

    @property
    def is_eps(self) -> bool:
        return self.stack is None

    def similar(self, other: "StackLabel") -> bool:
        """The ~ relation: both act on the same stack."""
        return self.stack is not None and self.stack == other.stack

    def base(self) -> "StackLabel":
        """The push label with the same stack and symbol (x_i for x_i^-1)."""
        if self.is_eps:
            return self
        return StackLabel(self.stack, True, self.index)

    def inverse(self) -> "StackLabel":
        if self.is_eps:
            return self
        return StackLabel(self.stack, not self.push, self.index)


EPS = StackLabel()


@dataclass(frozen=True)
class Automaton:
    """A two-stack automaton.

    ``vertices`` is an ordered tuple of ``(id, StackLabel)``; the order fixes the
    vertex numbering used downstream (T_1 .. T_m).
    """

    vertices: tuple
    edges: tuple
    start: str
    accept: str

    def __post_init__(self):
        object.__setattr__(
            self, "vertices", tuple((str(v), lab) for v, lab in self.vertices)
        )
        object.__setattr__(
            self, "edges", tuple(sorted({(str(a), str(b)) for a, b in self.edges}))
        )

    @cached_property
    def labels(self) -> dict:
        return dict(self.vertices)

    @cached_property
    def ids(self) -> tuple:
        return tuple(v for v, _ in self.vertices)

    @cached_property
    def index(self) -> dict:
        """1-based vertex numbers in declaration order."""
        return {v: i + 1 for i, v in enumerate(self.ids)}

    @cached_property
    def successors(self) -> dict:
        out = defaultdict(list)
        for a, b in self.edges:
            out[a].append(b)
        return {v: tuple(out[v]) for v in self.ids}

    @cached_property
    def predecessors(self) -> dict:
        inc = defaultdict(list)
        for a, b in self.edges:
            inc[b].append(a)
        return {v: tuple(inc[v]) for v in self.ids}

    @property
    def m(self) -> int:
        return len(self.vertices)

    @cached_property
    def stack_symbols(self) -> tuple:
        """Distinct push labels underlying the non-eps vertex labels, sorted.

        A pop-only symbol still counts: its Z-block is needed to encode the pop.
        """
        return tuple(sorted({lab.base() for _, lab in self.vertices if not lab.is_eps}))

    @property
    def r(self) -> int:
        return len(self.stack_symbols)

    def three_vertex_paths(self) -> list:
        return [
            (a, b, c)
            for a, b in self.edges
            for c in self.successors[b]
        ]

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "vertices": [{"id": v, "label": str(lab)} for v, lab in self.vertices],
            "edges": [list(e) for e in self.edges],
            "start": self.start,
            "accept": self.accept,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Automaton":
        try:
            verts = tuple(
                (item["id"], StackLabel.parse(item["label"])) for item in data["vertices"]
            )
            edges = tuple((a, b) for a, b in data["edges"])
            return cls(verts, edges, data["start"], data["accept"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed automaton: {exc}") from exc


def load_automaton(path) -> Automaton:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: {exc}") from exc
    return Automaton.from_dict(data)


def builtin(name: str) -> Automaton:
    """The automata shipped with the package: ``gamma1`` and ``gamma3``."""
    fname = {"gamma1": "gamma1.json", "gamma3": "gamma3.json"}.get(name)
    if fname is None:
        raise InputError(f"unknown builtin automaton {name!r}")
    text = resources.files("nzpatterns.data").joinpath(fname).read_text()
    return Automaton.from_dict(json.loads(text))


def validate(automaton: Automaton) -> list:
    """Return the list of violated two-stack-automaton conditions (empty if valid)."""
    problems = []
    ids = automaton.ids
    if len(set(ids)) != len(ids):
        problems.append("duplicate vertex ids")
    labels = automaton.labels
    for name, v in (("start", automaton.start), ("accept", automaton.accept)):
        if v not in labels:
            problems.append(f"{name} vertex {v!r} is not declared")
    if automaton.start == automaton.accept:
        problems.append("start and accept coincide")
    if automaton.start in labels and not labels[automaton.start].is_eps:
        problems.append(f"rho(v1) != eps (start {automaton.start!r} is {labels[automaton.start]})")
    if automaton.accept in labels and not labels[automaton.accept].is_eps:
        problems.append(f"rho(v2) != eps (accept {automaton.accept!r} is {labels[automaton.accept]})")
    for a, b in automaton.edges:
        if a not in labels or b not in labels:
            problems.append(f"edge {a}->{b} has an undeclared endpoint")
            continue
        if labels[a].similar(labels[b]):
            problems.append(f"edge {a}->{b} joins ~-equivalent labels {labels[a]}, {labels[b]}")
    return problems


# -- running paths ------------------------------------------------------------


@dataclass
class PathRun:
    path: tuple
    balanced: bool
    involution: Optional[tuple] = None  # 1-based images, position i -> involution[i-1]
    failure_step: Optional[int] = None  # 1-based
    reason: str = ""
    trace: list = field(default_factory=list)

    def cycles(self) -> list:
        """Non-trivial 2-cycles of the involution, 1-based, sorted."""
        if self.involution is None:
            return []
        return sorted(
            (i, j) for i, j in enumerate(self.involution, start=1) if i < j
        )


def run_labels(labels: Sequence[StackLabel], trace: bool = False) -> PathRun:
    """Run a label sequence through the two stacks."""
    stacks = {"x": [], "y": []}
    pi = list(range(1, len(labels) + 1))
    steps = []
    for t, lab in enumerate(labels, start=1):
        if not lab.is_eps:
            st = stacks[lab.stack]
            if lab.push:
                st.append((lab.index, t))
            else:
                if not st or st[-1][0] != lab.index:
                    top = st[-1][0] if st else None
                    return PathRun(
                        tuple(), False, None, t,
                        f"step {t}: {lab} against top {top!r} of stack {lab.stack}",
                        steps,
                    )
                _, t0 = st.pop()
                pi[t0 - 1] = t
                pi[t - 1] = t0
        if trace:
            steps.append(
                (tuple(i for i, _ in stacks["x"]), tuple(i for i, _ in stacks["y"]))
            )
    if stacks["x"] or stacks["y"]:
        return PathRun(tuple(), False, None, None, "stacks not empty at the end", steps)
    return PathRun(tuple(), True, tuple(pi), None, "", steps)


def run_path(automaton: Automaton, path: Sequence[str], trace: bool = False) -> PathRun:
    """Run a vertex sequence; raises :class:`InvalidPath` if it is not edge-consistent."""
    path = tuple(path)
    labels = automaton.labels
    edges = set(automaton.edges)
    for i, v in enumerate(path):
        if v not in labels:
            raise InvalidPath(f"vertex {v!r} at position {i + 1} is not declared", i + 1)
        if i and (path[i - 1], v) not in edges:
            raise InvalidPath(f"no edge {path[i - 1]}->{v} (position {i + 1})", i + 1)
    run = run_labels([labels[v] for v in path], trace=trace)
    run.path = path
    return run


def involution_violations(labels: Sequence[StackLabel], pi: Sequence[int]) -> list:
    """Check the three pairing conditions for a candidate involution (1-based)."""
    n = len(labels)
    bad = []
    for i in range(1, n + 1):
        j = pi[i - 1]
        if pi[j - 1] != i:
            bad.append(f"not an involution at {i}")
        if j == i and not labels[i - 1].is_eps:
            bad.append(f"fixed point {i} is not eps")
        if j > i:
            if labels[i - 1].is_eps or not labels[i - 1].push:
                bad.append(f"{i} opens a pair but is not a push")
            elif labels[j - 1] != labels[i - 1].inverse():
                bad.append(f"{j} does not pop what {i} pushed")
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if labels[i - 1].similar(labels[j - 1]) and j < pi[i - 1] < pi[j - 1]:
                bad.append(f"crossing {i}<{j}<{pi[i - 1]}<{pi[j - 1]}")
    return bad


# -- counting -----------------------------------------------------------------


def _step(labels, cfg, w):
    lab = labels[w]
    if lab.is_eps:
        return cfg
    xs, ys = cfg
    st = xs if lab.stack == "x" else ys
    if lab.push:
        st = st + (lab.index,)
    else:
        if not st or st[-1] != lab.index:
            return None
        st = st[:-1]
    return (st, ys) if lab.stack == "x" else (xs, st)


def balanced_counts(automaton: Automaton, nmax: int, budget: int = DEFAULT_BUDGET) -> list:
    """``[G(Gamma, 0), ..., G(Gamma, nmax)]`` by one level-by-level DP.

    Configurations are (vertex, X contents, Y contents); those holding more
    symbols than the remaining steps could pop are dropped.
    """
    if nmax < 0:
        raise ValueError("nmax must be non-negative")
    counts = [0] * (nmax + 1)
    if nmax == 0:
        return counts
    labels = automaton.labels
    succ = automaton.successors
    target = automaton.accept
    empty = ((), ())
    level = {(automaton.start, empty): 1}
    for n in range(1, nmax + 1):
        counts[n] = level.get((target, empty), 0)
        if n == nmax:
            break
        remaining = nmax - n
        nxt = defaultdict(int)
        for (v, cfg), c in level.items():
            for w in succ[v]:
                cfg2 = _step(labels, cfg, w)
                if cfg2 is None or len(cfg2[0]) + len(cfg2[1]) > remaining - 1:
                    continue
                nxt[(w, cfg2)] += c
        if len(nxt) > budget:
            raise BudgetExceeded(
                f"configuration DP exceeded budget at level {n + 1}",
                level=n + 1, live=len(nxt), budget=budget,
            )
        level = nxt
    return counts


def count_balanced(automaton: Automaton, n: int, budget: int = DEFAULT_BUDGET) -> int:
    """G(Gamma, n): balanced start-to-accept paths with n vertices."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return balanced_counts(automaton, n, budget)[n]


def iter_paths(automaton: Automaton, n: int, start=None, end=None) -> Iterator[tuple]:
    """All edge-consistent vertex sequences of length n (no stack semantics)."""
    start = automaton.start if start is None else start
    end = automaton.accept if end is None else end
    succ = automaton.successors

    def rec(path):
        if len(path) == n:
            if path[-1] == end:
                yield tuple(path)
            return
        for w in succ[path[-1]]:
            path.append(w)
            yield from rec(path)
            path.pop()

    if n >= 1:
        yield from rec([start])


def balanced_paths(automaton: Automaton, n: int, budget: int = DEFAULT_BUDGET) -> list:
    """All balanced start-to-accept paths of length n, in lexicographic DFS order."""
    labels = automaton.labels
    succ = automaton.successors
    target = automaton.accept
    found = []
    nodes = 0

    def rec(path, cfg):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded("balanced path enumeration exceeded budget", nodes=nodes)
        if len(path) == n:
            if path[-1] == target and cfg == ((), ()):
                found.append(tuple(path))
            return
        remaining = n - len(path)
        for w in succ[path[-1]]:
            cfg2 = _step(labels, cfg, w)
            if cfg2 is None or len(cfg2[0]) + len(cfg2[1]) > remaining - 1:
                continue
            path.append(w)
            rec(path, cfg2)
            path.pop()

    if n >= 1:
        rec([automaton.start], _step(labels, ((), ()), automaton.start) or ((), ()))
    return found


# -- the closed form for Gamma_1 ------------------------------------------------


def _log_sum(k: int) -> int:
    return sum(i.bit_length() - 1 for i in range(1, k + 1))


def gamma1_block_start(k: int) -> int:
    """Position where the binary expansion of k begins in Gamma_1's word."""
    return 2 + 14 * k + 6 * _log_sum(k)


def gamma1_alpha_oracle(n: int) -> int:
    """alpha_n for Gamma_1 from the path-length formula, without running the automaton.

    A balanced path exists for n = (mu + 1) + nu + 4k where
    mu = j + 6k + 2 S(k), nu = 4k + 4 S(k), S(k) = sum floor(log2 i), and the
    j-th binary digit of k (most significant first) is 1.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    k = 1
    while True:
        s = _log_sum(k)
        base = 1 + 6 * k + 2 * s + 4 * k + 4 * s + 4 * k  # n - j
        if base + 1 > n:
            return 0
        bits = bin(k)[2:]
        for j in range(1, len(bits) + 1):
            if base + j == n and bits[j - 1] == "1":
                return 1
        k += 1


def gamma1_word(length: int) -> str:
    return "".join(str(gamma1_alpha_oracle(n)) for n in range(1, length + 1))
