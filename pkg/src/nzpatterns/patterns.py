"""Partial permutation patterns: containment, avoidance counting, expansion, alphabets.

A partial pattern is a 0-1 matrix with at most one 1 in every row and column.
``M`` contains ``P`` when deleting rows and columns of ``M`` leaves exactly
``P``; zeros of ``P`` are constraints, not wildcards.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .errors import BudgetExceeded, InfeasibleError, InputError

DEFAULT_BUDGET = 10**7
MAX_COUNT_N = 11
MAX_ALPHABET_G = 10


class PartialPattern:
    """Immutable ``rows x cols`` partial permutation matrix (0-based cells)."""

    __slots__ = ("rows", "cols", "row_to_col", "col_to_row", "_hash")

    def __init__(self, rows: int, cols: int, ones: Iterable[tuple] = ()):
        if rows < 0 or cols < 0:
            raise InputError("negative dimensions")
        rtc = [None] * rows
        ctr = [None] * cols
        for r, c in ones:
            if not (0 <= r < rows and 0 <= c < cols):
                raise InputError(f"cell ({r}, {c}) outside {rows}x{cols}")
            if rtc[r] is not None or ctr[c] is not None:
                raise InputError(f"second 1 in row {r} or column {c}")
            rtc[r] = c
            ctr[c] = r
        self.rows = rows
        self.cols = cols
        self.row_to_col = tuple(rtc)
        self.col_to_row = tuple(ctr)
        self._hash = hash((rows, cols, self.row_to_col))

    # -- constructors ---------------------------------------------------------

    @classmethod
    def from_rows(cls, matrix: Sequence[Sequence[int]]) -> "PartialPattern":
        rows = len(matrix)
        cols = len(matrix[0]) if rows else 0
        ones = []
        for r, line in enumerate(matrix):
            if len(line) != cols:
                raise InputError("ragged matrix")
            for c, v in enumerate(line):
                if v not in (0, 1):
                    raise InputError(f"entry {v!r} is not 0/1")
                if v:
                    ones.append((r, c))
        return cls(rows, cols, ones)

    @classmethod
    def from_word(cls, word: Sequence[int]) -> "PermutationMatrix":
        return PermutationMatrix(word)

    # -- views ----------------------------------------------------------------

    @property
    def ones(self) -> frozenset:
        return frozenset((r, c) for r, c in enumerate(self.row_to_col) if c is not None)

    @property
    def shape(self) -> tuple:
        return (self.rows, self.cols)

    def __len__(self):
        return sum(c is not None for c in self.row_to_col)

    def __eq__(self, other):
        if not isinstance(other, PartialPattern):
            return NotImplemented
        return (self.rows, self.cols, self.row_to_col) == (
            other.rows, other.cols, other.row_to_col,
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"PartialPattern({self.rows}, {self.cols}, {sorted(self.ones)})"

    def is_permutation(self) -> bool:
        return self.rows == self.cols and None not in self.row_to_col

    def to_permutation(self) -> "PermutationMatrix":
        if not self.is_permutation():
            raise InputError("not a permutation matrix")
        return PermutationMatrix([c + 1 for c in self.row_to_col])

    def to_rows(self) -> list:
        out = [[0] * self.cols for _ in range(self.rows)]
        for r, c in enumerate(self.row_to_col):
            if c is not None:
                out[r][c] = 1
        return out

    def format(self) -> str:
        return "\n".join(" ".join(map(str, row)) for row in self.to_rows())

    def transpose(self) -> "PartialPattern":
        return PartialPattern(self.cols, self.rows, [(c, r) for r, c in self.ones])

    def reverse_complement(self) -> "PartialPattern":
        """Rotate by 180 degrees."""
        R, C = self.rows - 1, self.cols - 1
        return PartialPattern(self.rows, self.cols, [(R - r, C - c) for r, c in self.ones])

    def insert_zero_row(self, pos: int) -> "PartialPattern":
        """Insert an all-zero row so that it becomes row ``pos``."""
        return PartialPattern(
            self.rows + 1, self.cols,
            [(r + (r >= pos), c) for r, c in self.ones],
        )

    def insert_zero_col(self, pos: int) -> "PartialPattern":
        return PartialPattern(
            self.rows, self.cols + 1,
            [(r, c + (c >= pos)) for r, c in self.ones],
        )

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "PartialPattern":
        """Restriction to the given (increasing) row and column indices."""
        cidx = {c: k for k, c in enumerate(cols)}
        ones = []
        for k, r in enumerate(rows):
            c = self.row_to_col[r]
            if c is not None and c in cidx:
                ones.append((k, cidx[c]))
        return PartialPattern(len(rows), len(cols), ones)


class PermutationMatrix(PartialPattern):
    """Square pattern with exactly one 1 per row; cell (i, sigma(i)) in 1-based terms."""

    __slots__ = ("word",)

    def __init__(self, word: Sequence[int]):
        word = tuple(int(x) for x in word)
        n = len(word)
        if sorted(word) != list(range(1, n + 1)):
            raise InputError(f"{word} is not a permutation of 1..{n}")
        super().__init__(n, n, [(i, w - 1) for i, w in enumerate(word)])
        self.word = word

    def __repr__(self):
        return f"PermutationMatrix({' '.join(map(str, self.word))})"


@dataclass
class PatternSet:
    """Ordered, duplicate-free collection of patterns with optional provenance."""

    members: list = field(default_factory=list)
    metadata: list = field(default_factory=list)

    def __post_init__(self):
        members, metadata = list(self.members), list(self.metadata)
        metadata += [None] * (len(members) - len(metadata))
        self.members, self.metadata = [], []
        self._seen = set()
        for p, meta in zip(members, metadata):
            self.add(p, meta)

    def add(self, pattern: PartialPattern, meta=None) -> bool:
        if pattern in self._seen:
            return False
        self._seen.add(pattern)
        self.members.append(pattern)
        self.metadata.append(meta)
        return True

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, pattern):
        return pattern in self._seen


# -- pattern files -------------------------------------------------------------


def _parse_block(lines: list, fmt: str) -> PartialPattern:
    tokens = [line.split() for line in lines]
    if fmt == "auto":
        flat = tokens[0]
        if len(lines) == 1 and not all(t in ("0", "1") for t in flat):
            fmt = "perm"
        elif len(lines) == 1 and "0" not in flat and len(flat) > 1:
            fmt = "perm"
        else:
            fmt = "matrix"
    try:
        if fmt == "perm":
            if len(lines) != 1:
                raise InputError("permutation shorthand must be a single line")
            return PermutationMatrix([int(t) for t in tokens[0]])
        if fmt == "matrix":
            return PartialPattern.from_rows([[int(t) for t in row] for row in tokens])
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad pattern block {lines!r}: {exc}") from exc
    raise InputError(f"unknown pattern format {fmt!r}")


def parse_patterns(text: str, fmt: str = "auto") -> PatternSet:
    """Parse blank-line separated blocks; ``#`` starts a comment line."""
    out = PatternSet()
    block = []
    for raw in text.splitlines() + [""]:
        line = raw.strip()
        if line.startswith("#"):
            continue
        if line:
            block.append(line)
        elif block:
            out.add(_parse_block(block, fmt))
            block = []
    return out


def load_patterns(path, fmt: str = "auto") -> PatternSet:
    with open(path) as fh:
        return parse_patterns(fh.read(), fmt)


def format_patterns(patterns: Iterable[PartialPattern]) -> str:
    return "\n\n".join(p.format() for p in patterns) + "\n"


# -- containment ------------------------------------------------------------------


def _max_flow_feasible(supplies: dict, row_need: dict, col_need: dict) -> bool:
    """Can region supplies be split between row gaps and column gaps to meet demand?

    ``supplies`` maps (row_gap, col_gap) to the number of host ones available
    there; each one may serve its row gap or its column gap, not both.
    """
    need = sum(row_need.values()) + sum(col_need.values())
    if need == 0:
        return True
    # nodes: 's', ('R', a), ('C', b), ('G', a, b), 't'
    cap = {}

    def add(u, v, c):
        cap.setdefault(u, {})
        cap.setdefault(v, {})
        cap[u][v] = cap[u].get(v, 0) + c
        cap[v].setdefault(u, 0)

    for (a, b), n in supplies.items():
        if n <= 0:
            continue
        g = ("G", a, b)
        if row_need.get(a, 0) == 0 and col_need.get(b, 0) == 0:
            continue
        add("s", g, n)
        if row_need.get(a, 0):
            add(g, ("R", a), n)
        if col_need.get(b, 0):
            add(g, ("C", b), n)
    for a, d in row_need.items():
        if d:
            add(("R", a), "t", d)
    for b, d in col_need.items():
        if d:
            add(("C", b), "t", d)
    if "s" not in cap or "t" not in cap:
        return False
    flow = 0
    while flow < need:
        parent = {"s": None}
        queue = deque(["s"])
        while queue and "t" not in parent:
            u = queue.popleft()
            for v, c in cap[u].items():
                if c > 0 and v not in parent:
                    parent[v] = u
                    queue.append(v)
        if "t" not in parent:
            return False
        path, v = [], "t"
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        push = min(cap[u][v] for u, v in path)
        for u, v in path:
            cap[u][v] -= push
            cap[v][u] += push
        flow += push
    return True


class _Compiled:
    """Pattern-side data reused across hosts."""

    def __init__(self, pattern: PartialPattern):
        self.pattern = pattern
        self.p, self.q = pattern.rows, pattern.cols
        self.prow = pattern.row_to_col
        self.one_rows = [i for i, c in enumerate(self.prow) if c is not None]
        self.one_cols = sorted(c for c in self.prow if c is not None)
        self.col_rank = {c: k for k, c in enumerate(self.one_cols)}
        # zero columns in each gap of the sorted one-columns (k = 0 .. len)
        bounds = [-1] + self.one_cols + [self.q]
        self.col_gap_need = [bounds[k + 1] - bounds[k] - 1 for k in range(len(bounds) - 1)]


class _Search:
    def __init__(self, comp: _Compiled, hrow: Sequence, hcol: Sequence, budget: int,
                 pins: Optional[dict] = None):
        self.c = comp
        self.hrow = hrow
        self.hcol = hcol
        self.H = len(hrow)
        self.W = len(hcol)
        self.budget = budget
        self.nodes = 0
        self.pins = dict(pins or {})
        nk = len(comp.one_cols)
        self.assigned = [None] * nk  # host column per sorted one-column
        self.rowmap = [None] * comp.p
        self.on_found = None

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetExceeded(
                f"containment search exceeded {self.budget} nodes", nodes=self.nodes
            )

    def _col_window(self, k: int):
        """Host column range allowed for sorted one-column k given current assignment."""
        c = self.c
        j = c.one_cols[k]
        lo_j, lo_h = -1, -1
        for t in range(k - 1, -1, -1):
            if self.assigned[t] is not None:
                lo_j, lo_h = c.one_cols[t], self.assigned[t]
                break
        hi_j, hi_h = c.q, self.W
        for t in range(k + 1, len(c.one_cols)):
            if self.assigned[t] is not None:
                hi_j, hi_h = c.one_cols[t], self.assigned[t]
                break
        return lo_h + (j - lo_j), hi_h - (hi_j - j)

    def _anchors(self):
        """Row anchors in order: (pattern row, host row) for rows already fixed."""
        return [(i, h) for i, h in enumerate(self.rowmap) if h is not None]

    def run(self, collect: bool = False):
        c = self.c
        self.found = []
        # pre-place pinned one-rows
        for i, h in sorted(self.pins.items()):
            if not (0 <= h < self.H):
                return False
            pc = c.prow[i]
            hc = self.hrow[h]
            if pc is not None:
                if hc is None:
                    return False
                k = c.col_rank[pc]
                lo, hi = self._col_window(k)
                if not lo <= hc <= hi:
                    return False
                self.assigned[k] = hc
            self.rowmap[i] = h
        anchors = self._anchors()
        for (i1, h1), (i2, h2) in zip(anchors, anchors[1:]):
            if h2 - h1 < i2 - i1:
                return False
        if anchors and (anchors[0][1] < anchors[0][0]
                        or self.H - anchors[-1][1] < c.p - anchors[-1][0]):
            return False
        order = [i for i in c.one_rows if i not in self.pins]
        ok = self._rec(order, 0, collect)
        return ok

    def _bounds_for_row(self, i):
        """Host row range for pattern row i from the nearest fixed rows."""
        lo, hi = i, self.H - (self.c.p - i)
        for t in range(i - 1, -1, -1):
            if self.rowmap[t] is not None:
                lo = self.rowmap[t] + (i - t)
                break
        for t in range(i + 1, self.c.p):
            if self.rowmap[t] is not None:
                hi = self.rowmap[t] - (t - i)
                break
        return lo, hi

    def _rec(self, order, pos, collect):
        if pos == len(order):
            if self._finish():
                if collect:
                    occ = (tuple(self.rowmap), tuple(self.assigned))
                    if self.on_found is not None:
                        return bool(self.on_found(occ))
                    self.found.append(occ)
                    return False
                return True
            return False
        c = self.c
        i = order[pos]
        k = c.col_rank[c.prow[i]]
        rlo, rhi = self._bounds_for_row(i)
        clo, chi = self._col_window(k)
        if rlo > rhi or clo > chi:
            return False
        hrow = self.hrow
        for h in range(rlo, rhi + 1):
            hc = hrow[h]
            if hc is None or hc < clo or hc > chi:
                continue
            self._tick()
            self.rowmap[i] = h
            self.assigned[k] = hc
            if self._viable(order, pos + 1) and self._rec(order, pos + 1, collect):
                return True
            self.rowmap[i] = None
            self.assigned[k] = None
        return False

    def _viable(self, order, start) -> bool:
        """Forward check: every unplaced one-row still has some candidate cell."""
        c = self.c
        hrow = self.hrow
        for i in order[start:]:
            rlo, rhi = self._bounds_for_row(i)
            clo, chi = self._col_window(c.col_rank[c.prow[i]])
            if rlo > rhi or clo > chi:
                return False
            for h in range(rlo, rhi + 1):
                hc = hrow[h]
                if hc is not None and clo <= hc <= chi:
                    break
            else:
                return False
        return True

    def _finish(self) -> bool:
        """Exact check that the zero rows/columns can be placed around the fixed ones.

        Every host one outside the fixed rows and columns lies in one row gap
        and one column gap; it can serve as a zero row or a zero column but not
        both, which makes the remaining choice a small flow problem.
        """
        c = self.c
        anchors = self._anchors()
        bounds = [(-1, -1)] + anchors + [(c.p, self.H)]
        row_gap = [None] * self.H
        row_need = {}
        for a in range(len(bounds) - 1):
            (i1, h1), (i2, h2) = bounds[a], bounds[a + 1]
            if i2 - i1 - 1 > h2 - h1 - 1:
                return False
            row_need[a] = i2 - i1 - 1
            for h in range(h1 + 1, h2):
                row_gap[h] = a
        cbounds = [-1] + list(self.assigned) + [self.W]
        col_gap = [None] * self.W
        col_need = {}
        for b in range(len(cbounds) - 1):
            c1, c2 = cbounds[b], cbounds[b + 1]
            if c.col_gap_need[b] > c2 - c1 - 1:
                return False
            col_need[b] = c.col_gap_need[b]
            for x in range(c1 + 1, c2):
                col_gap[x] = b
        free_rows, free_cols, supplies = {}, {}, {}
        for h in range(self.H):
            a = row_gap[h]
            if a is not None and self.hrow[h] is None:
                free_rows[a] = free_rows.get(a, 0) + 1
        for x in range(self.W):
            b = col_gap[x]
            if b is None:
                continue
            r = self.hcol[x]
            if r is None:
                free_cols[b] = free_cols.get(b, 0) + 1
            elif row_gap[r] is not None:
                key = (row_gap[r], b)
                supplies[key] = supplies.get(key, 0) + 1
        rn = {a: max(0, need - free_rows.get(a, 0)) for a, need in row_need.items()}
        cn = {b: max(0, need - free_cols.get(b, 0)) for b, need in col_need.items()}
        return _max_flow_feasible(supplies, rn, cn)


def contains(host: PartialPattern, pattern: PartialPattern, budget: int = DEFAULT_BUDGET,
             pins: Optional[dict] = None, compiled: Optional[_Compiled] = None) -> bool:
    """True iff ``pattern`` is obtained from ``host`` by deleting rows and columns.

    ``pins`` optionally fixes pattern rows to host rows (0-based).  Raises
    :class:`BudgetExceeded` after ``budget`` search nodes.
    """
    if pattern.rows > host.rows or pattern.cols > host.cols:
        return False
    if len(pattern) > len(host):
        return False
    comp = compiled or _Compiled(pattern)
    s = _Search(comp, host.row_to_col, host.col_to_row, budget, pins)
    return s.run()


def search_stats(host, pattern, budget=DEFAULT_BUDGET, pins=None) -> tuple:
    """(found, nodes expanded) for reporting budget use."""
    comp = _Compiled(pattern)
    s = _Search(comp, host.row_to_col, host.col_to_row, budget, pins)
    if pattern.rows > host.rows or pattern.cols > host.cols:
        return False, 0
    return s.run(), s.nodes


def occurrences(host: PartialPattern, pattern: PartialPattern,
                budget: int = DEFAULT_BUDGET) -> list:
    """All occurrences of a pattern with no zero rows or columns.

    Each occurrence is ``(rows, cols)``: the host rows (in pattern row order) and
    host columns (in pattern column order).
    """
    if not pattern.is_permutation():
        raise InputError("occurrence listing needs a permutation pattern")
    if pattern.rows > host.rows or pattern.cols > host.cols:
        return []
    comp = _Compiled(pattern)
    s = _Search(comp, host.row_to_col, host.col_to_row, budget)
    s.run(collect=True)
    return [(rows, cols) for rows, cols in s.found]


def contains_bruteforce(host: PartialPattern, pattern: PartialPattern) -> bool:
    """Oracle: try every row subset and column subset."""
    if pattern.rows > host.rows or pattern.cols > host.cols:
        return False
    for rows in itertools.combinations(range(host.rows), pattern.rows):
        for cols in itertools.combinations(range(host.cols), pattern.cols):
            if host.submatrix(rows, cols) == pattern:
                return True
    return False


# -- counting ---------------------------------------------------------------------


def _guard_n(n, limit):
    if n < 0:
        raise InputError("n must be non-negative")
    if limit is not None and n > limit:
        raise InfeasibleError(f"n = {n} exceeds the exhaustive-counting guard {limit}")


def count_avoiders(patterns: Iterable[PartialPattern], n: int,
                   budget: int = DEFAULT_BUDGET, limit: Optional[int] = MAX_COUNT_N) -> int:
    """C_n: number of n x n permutation matrices avoiding every pattern.

    Builds sigma one row at a time.  The first t rows form a partial host
    (unused columns are zero columns); an occurrence lying in those rows
    persists, so only occurrences that use the newest row are searched for.
    """
    _guard_n(n, limit)
    pats = [p for p in patterns if p.rows <= n and p.cols <= n]
    if not pats:
        return math.factorial(n)
    comps = [_Compiled(p) for p in pats]
    hrow = []
    hcol = [None] * n
    used = [False] * n
    total = 0
    nodes = 0

    def bad(t):
        nonlocal nodes
        for comp in comps:
            if comp.p > t + 1:
                continue
            last = comp.p - 1
            s = _Search(comp, hrow, hcol, budget - nodes, {last: t})
            hit = s.run()
            nodes += s.nodes
            if hit:
                return True
        return False

    def rec(t):
        nonlocal total
        if t == n:
            total += 1
            return
        for v in range(n):
            if used[v]:
                continue
            hrow.append(v)
            hcol[v] = t
            used[v] = True
            if not bad(t):
                rec(t + 1)
            used[v] = False
            hcol[v] = None
            hrow.pop()

    rec(0)
    return total


def count_avoiders_filter(patterns: Iterable[PartialPattern], n: int,
                          limit: Optional[int] = 9) -> int:
    """Oracle: filter all of S_n.

    Permutation patterns are looked up in the set of every pattern of sigma
    (all standardized subsequences); partial patterns fall back to the
    row/column subset oracle.
    """
    _guard_n(n, limit)
    pats = [p for p in patterns if p.rows <= n and p.cols <= n]
    perm_words = {tuple(c + 1 for c in p.row_to_col) for p in pats if p.is_permutation()}
    partial = [p for p in pats if not p.is_permutation()]
    sizes = sorted({len(w) for w in perm_words})
    count = 0
    for sigma in itertools.permutations(range(1, n + 1)):
        hit = False
        for k in sizes:
            for idx in itertools.combinations(range(n), k):
                vals = [sigma[i] for i in idx]
                order = sorted(vals)
                std = tuple(order.index(v) + 1 for v in vals)
                if std in perm_words:
                    hit = True
                    break
            if hit:
                break
        if not hit and partial:
            host = PermutationMatrix(sigma)
            hit = any(contains_bruteforce(host, p) for p in partial)
        if not hit:
            count += 1
    return count


@dataclass
class WilfResult:
    agree: bool
    upto: int
    first_divergence: Optional[int] = None
    counts1: list = field(default_factory=list)
    counts2: list = field(default_factory=list)


def wilf_mod2(set1, set2, upto: int, budget: int = DEFAULT_BUDGET,
              limit: Optional[int] = MAX_COUNT_N) -> WilfResult:
    """Compare C_n(set1) and C_n(set2) modulo 2 for n = 1 .. upto."""
    _guard_n(upto, limit)
    set1, set2 = list(set1), list(set2)
    c1, c2 = [], []
    for n in range(1, upto + 1):
        a = count_avoiders(set1, n, budget, limit)
        b = count_avoiders(set2, n, budget, limit)
        c1.append(a)
        c2.append(b)
        if (a - b) % 2:
            return WilfResult(False, upto, n, c1, c2)
    return WilfResult(True, upto, None, c1, c2)


# -- expansion to permutation patterns ----------------------------------------------


def expand_partial(pattern: PartialPattern, max_size: int = 9) -> PatternSet:
    """Union over l <= rows + cols of the l x l permutation matrices containing ``pattern``."""
    k = pattern.rows + pattern.cols
    if k > max_size:
        raise InfeasibleError(f"expansion up to size {k} exceeds guard {max_size}")
    out = PatternSet()
    comp = _Compiled(pattern)
    for ell in range(max(pattern.rows, pattern.cols), k + 1):
        for word in itertools.permutations(range(1, ell + 1)):
            host = PermutationMatrix(word)
            s = _Search(comp, host.row_to_col, host.col_to_row, DEFAULT_BUDGET)
            if s.run():
                out.add(host, {"size": ell})
    return out


# -- simple permutations and the alphabet ------------------------------------------

L_WORD = (5, 6, 7, 4, 1, 2, 3)
L_PRIME_WORD = (6, 2, 7, 9, 5, 1, 3, 8, 4)


def L_matrix() -> PermutationMatrix:
    return PermutationMatrix(L_WORD)


def L_prime() -> PermutationMatrix:
    return PermutationMatrix(L_PRIME_WORD)


def _word(perm) -> tuple:
    if isinstance(perm, PermutationMatrix):
        return perm.word
    if isinstance(perm, PartialPattern):
        return perm.to_permutation().word
    return tuple(perm)


def is_simple(perm) -> bool:
    """No block of consecutive rows (2 <= size < n) maps onto consecutive columns."""
    w = _word(perm)
    n = len(w)
    for i in range(n):
        lo = hi = w[i]
        for j in range(i + 1, n):
            lo = min(lo, w[j])
            hi = max(hi, w[j])
            size = j - i + 1
            if size == n:
                break
            if hi - lo == size - 1:
                return False
    return True


def simple_permutations(n: int) -> Iterator[tuple]:
    for w in itertools.permutations(range(1, n + 1)):
        if is_simple(w):
            yield w


def single_insertions(word: Sequence[int]) -> list:
    """All permutations obtained by inserting one new 1 into the matrix of ``word``."""
    n = len(word)
    out = set()
    for pos in range(n + 1):
        for val in range(1, n + 2):
            new = [v + (v >= val) for v in word]
            new.insert(pos, val)
            out.add(tuple(new))
    return sorted(out)


def permutations_containing(base: Sequence[int], g: int) -> set:
    """Every g-permutation containing ``base``: place base on some rows/columns, fill the rest."""
    k = len(base)
    out = set()
    rest_n = g - k
    for rows in itertools.combinations(range(g), k):
        free_rows = [r for r in range(g) if r not in rows]
        for cols in itertools.combinations(range(1, g + 1), k):
            free_cols = [c for c in range(1, g + 1) if c not in cols]
            w = [0] * g
            for r, b in zip(rows, base):
                w[r] = cols[b - 1]
            for fill in itertools.permutations(free_cols, rest_n):
                for r, c in zip(free_rows, fill):
                    w[r] = c
                out.add(tuple(w))
    return out


class AlphabetCache:
    """Explicit per-caller cache of computed alphabets keyed by (g, toy)."""

    def __init__(self):
        self._store = {}

    def get(self, g, toy):
        return self._store.get((g, toy))

    def put(self, g, toy, value):
        self._store[(g, toy)] = value

    def __len__(self):
        return len(self._store)


def alphabet(g: int, cache: Optional[AlphabetCache] = None, toy: bool = False,
             max_g: int = MAX_ALPHABET_G) -> tuple:
    """A_g in lexicographic order of one-line words, as PermutationMatrix values.

    Faithful mode: simple g x g permutations containing L.  Toy mode drops the
    containment requirement (non-faithful; for small end-to-end experiments).
    """
    if g < 1:
        raise InputError("g must be positive")
    if g > max_g:
        raise InfeasibleError(f"g = {g} exceeds the alphabet guard {max_g}")
    if cache is not None:
        hit = cache.get(g, toy)
        if hit is not None:
            return hit
    if toy:
        words = list(simple_permutations(g))
    elif g < len(L_WORD):
        words = []
    else:
        words = sorted(w for w in permutations_containing(L_WORD, g) if is_simple(w))
    result = tuple(PermutationMatrix(w) for w in words)
    if cache is not None:
        cache.put(g, toy, result)
    return result
