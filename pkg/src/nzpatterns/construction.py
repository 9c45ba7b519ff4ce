"""From a two-stack automaton to forbidden partial patterns, and back.

The forbidden set is assembled from g x g alphabet matrices laid out on a
block grid.  A matrix ``M(gamma, pi)`` encodes a path and a pairing; the
fixed points of the B <-> B' involution are exactly the encodings of balanced
paths.  Block coordinates are 1-based everywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import patterns as pt
from .automaton import Automaton, balanced_paths, run_path
from .errors import (
    AlphabetTooSmall,
    BlockCollision,
    InvariantError,
    InputError,
    NoUnblockedBlock,
    NotInDomain,
)

# Block layouts of the five W templates.  Slots: Ti/Tj/Tk are vertex matrices
# for a path v_i -> v_j -> v_k, T1/T2 those of start/accept, L and R range over
# {B, B'}, Zp is the label matrix of v_j.
TEMPLATES = {
    "W1": ((8, 8), ((1, 3, "Ti"), (2, 6, "Tj"), (3, 1, "L"), (4, 8, "Zp"),
                    (5, 7, "Tk"), (6, 2, "B'"), (7, 5, "R"), (8, 4, "Zp"))),
    "W2": ((8, 8), ((1, 5, "Zp"), (2, 4, "Ti"), (3, 7, "Tj"), (4, 2, "L"),
                    (5, 1, "Zp"), (6, 8, "Tk"), (7, 3, "B'"), (8, 6, "R"))),
    "W3": ((7, 7), ((1, 3, "Ti"), (2, 6, "Tj"), (3, 1, "L"), (4, 4, "E"),
                    (5, 7, "Tk"), (6, 2, "B'"), (7, 5, "R"))),
    "W4": ((6, 6), ((1, 5, "T1"), (2, 2, "P"), (3, 3, "E"), (4, 6, "Tk"),
                    (5, 1, "B'"), (6, 4, "R"))),
    "W5": ((6, 6), ((1, 3, "Ti"), (2, 6, "T2"), (3, 1, "L"), (4, 4, "E"),
                    (5, 5, "Q"), (6, 2, "B'"))),
}

# Where the boxed B sits in each primed template (it replaces the B' slot).
MARKED = {"W1": (6, 2), "W2": (7, 3), "W3": (6, 2), "W4": (5, 1), "W5": (6, 2)}

F5_SHAPES = {
    "F5a": ((1, 2, "Zp"), (2, 3, "Zq"), (3, 1, "B")),
    "F5b": ((1, 2, "Zp"), (2, 3, "Zq"), (3, 1, "B'")),
    "F5c": ((1, 3, "Tj"), (2, 1, "Zp"), (3, 2, "Zq")),
}

# Counts stated for Gamma_1 at g = 10 (reported next to ours, never asserted here).
CLAIMED_COUNTS_GAMMA1 = {"F1": 756, "F2": 5208, "F3": 4, "F4": 292, "F5": 594, "total": 6854}


# -- alphabet assignment -------------------------------------------------------------


@dataclass(frozen=True)
class AlphabetAssignment:
    g: int
    toy: bool
    names: tuple          # symbol names in assignment order
    matrices: tuple       # matching PermutationMatrix values
    vertex_symbol: dict   # vertex id -> "T<j>"
    label_symbol: dict    # base StackLabel -> "Z<p>"
    available: int = 0

    def matrix(self, name: str) -> pt.PermutationMatrix:
        return self._lookup[name]

    @property
    def _lookup(self) -> dict:
        return dict(zip(self.names, self.matrices))

    @property
    def required(self) -> int:
        return len(self.names)

    def symbol_of_label(self, label) -> str:
        """Block symbol for a vertex label: E for eps, Z_p for x_i or x_i^-1."""
        if label.is_eps:
            return "E"
        return self.label_symbol[label.base()]


def assign_alphabet(automaton: Automaton, g: int, cache: Optional[pt.AlphabetCache] = None,
                    toy: bool = False, max_g: int = pt.MAX_ALPHABET_G) -> AlphabetAssignment:
    """Take A_g in canonical order: P, Q, B, B', E, then T_1..T_m, then Z_1..Z_r."""
    alpha = pt.alphabet(g, cache=cache, toy=toy, max_g=max_g)
    m, r = automaton.m, automaton.r
    need = 5 + m + r
    if len(alpha) <= need:
        raise AlphabetTooSmall(need, len(alpha), g)
    names = ["P", "Q", "B", "B'", "E"]
    names += [f"T{j}" for j in range(1, m + 1)]
    names += [f"Z{p}" for p in range(1, r + 1)]
    vsym = {v: f"T{automaton.index[v]}" for v in automaton.ids}
    lsym = {lab: f"Z{p}" for p, lab in enumerate(automaton.stack_symbols, start=1)}
    return AlphabetAssignment(g, toy, tuple(names), tuple(alpha[:need]), vsym, lsym, len(alpha))


def place_blocks(g: int, shape: tuple, blocks: Sequence, assignment: AlphabetAssignment
                 ) -> pt.PartialPattern:
    """Materialize a block layout ``[(I, J, symbol), ...]`` as a partial pattern."""
    R, C = shape
    ones = []
    for I, J, sym in blocks:
        mat = assignment.matrix(sym)
        for r, c in enumerate(mat.row_to_col):
            ones.append(((I - 1) * g + r, (J - 1) * g + c))
    return pt.PartialPattern(R * g, C * g, ones)


# -- forbidden families --------------------------------------------------------------


@dataclass(frozen=True)
class Member:
    """One forbidden pattern with its provenance.

    ``blocks`` is the block layout for F4/F5 members (and F4' members, where
    ``marked`` gives the boxed B); F1-F3 members are described by ``params``.
    """

    family: str
    template: str
    params: tuple
    blocks: Optional[tuple] = None
    shape: Optional[tuple] = None
    marked: Optional[tuple] = None

    def describe(self) -> dict:
        out = {"family": self.family, "template": self.template}
        out.update(dict(self.params))
        return out


def _instantiate(template: str, slots: dict, primed: bool = False) -> tuple:
    shape, entries = TEMPLATES[template]
    out = []
    for I, J, slot in entries:
        if slot == "B'":
            sym = "B" if primed else "B'"
        elif slot in ("L", "R"):
            sym = "B" if primed else slots[slot]
        else:
            sym = slots[slot]
        out.append((I, J, sym))
    return shape, tuple(out)


def _w_members(automaton: Automaton, a: AlphabetAssignment, primed: bool) -> list:
    out = []
    labels = automaton.labels
    T = a.vertex_symbol
    choices = [("B", "B")] if primed else [(x, y) for x in ("B", "B'") for y in ("B", "B'")]
    fam = "F4'" if primed else "F4"
    for vi, vj, vk in automaton.three_vertex_paths():
        lab = labels[vj]
        if lab.is_eps:
            tmpl, extra = "W3", {}
        elif lab.push:
            tmpl, extra = "W1", {"Zp": a.label_symbol[lab.base()]}
        else:
            tmpl, extra = "W2", {"Zp": a.label_symbol[lab.base()]}
        for Lc, Rc in choices:
            slots = {"Ti": T[vi], "Tj": T[vj], "Tk": T[vk], "L": Lc, "R": Rc, "E": "E", **extra}
            shape, blocks = _instantiate(tmpl, slots, primed)
            params = (("path", (vi, vj, vk)), ("L", Lc), ("R", Rc))
            out.append(Member(fam, tmpl + ("'" if primed else ""), params, blocks, shape,
                              MARKED[tmpl] if primed else None))
    for vk in automaton.successors[automaton.start]:
        for Rc in (["B"] if primed else ["B", "B'"]):
            slots = {"T1": T[automaton.start], "Tk": T[vk], "P": "P", "E": "E", "R": Rc}
            shape, blocks = _instantiate("W4", slots, primed)
            out.append(Member(fam, "W4" + ("'" if primed else ""),
                              (("path", (automaton.start, vk)), ("R", Rc)), blocks, shape,
                              MARKED["W4"] if primed else None))
    for vi in automaton.predecessors[automaton.accept]:
        for Lc in (["B"] if primed else ["B", "B'"]):
            slots = {"Ti": T[vi], "T2": T[automaton.accept], "E": "E", "Q": "Q", "L": Lc}
            shape, blocks = _instantiate("W5", slots, primed)
            out.append(Member(fam, "W5" + ("'" if primed else ""),
                              (("path", (vi, automaton.accept)), ("L", Lc)), blocks, shape,
                              MARKED["W5"] if primed else None))
    return out


def _f5_members(automaton: Automaton, a: AlphabetAssignment) -> list:
    out = []
    zs = [(lab, sym) for lab, sym in a.label_symbol.items()]
    pairs = [(p, q) for p in zs for q in zs if p[0].similar(q[0])]
    for (lp, zp), (lq, zq) in pairs:
        for shape_name in ("F5a", "F5b"):
            blocks = tuple((I, J, {"Zp": zp, "Zq": zq}.get(s, s))
                           for I, J, s in F5_SHAPES[shape_name])
            out.append(Member("F5", shape_name, (("Zp", zp), ("Zq", zq)), blocks, (3, 3)))
        for v in automaton.ids:
            tj = a.vertex_symbol[v]
            blocks = tuple((I, J, {"Zp": zp, "Zq": zq, "Tj": tj}.get(s, s))
                           for I, J, s in F5_SHAPES["F5c"])
            out.append(Member("F5", "F5c", (("Zp", zp), ("Zq", zq), ("Tj", tj)), blocks, (3, 3)))
    return out


def f2_pattern(g: int, corner_t: pt.PermutationMatrix, corner_b: pt.PermutationMatrix,
               tall: bool, middle: Optional[int]) -> pt.PartialPattern:
    """F2 member: T in the top-right corner, B or B' bottom-left, optional middle 1.

    Wide shape is (2g+1) x (5g+1) with a free middle row; the tall shape is
    (5g+1) x (2g+1) with a free middle column.  ``middle`` indexes the free
    cells of that row/column (0 .. 3g) or is None.
    """
    R, C = (5 * g + 1, 2 * g + 1) if tall else (2 * g + 1, 5 * g + 1)
    ones = [(r, C - g + c) for r, c in enumerate(corner_t.row_to_col)]
    ones += [(R - g + r, c) for r, c in enumerate(corner_b.row_to_col)]
    if middle is not None:
        if tall:
            ones.append((g + middle, g))
        else:
            ones.append((g, g + middle))
    return pt.PartialPattern(R, C, ones)


def f2_middle_cells(g: int) -> int:
    """Cells of the free middle line that can hold a 1 without breaking the partial-pattern rule."""
    return 3 * g + 1


@dataclass
class ForbiddenBundle:
    automaton: Automaton
    assignment: AlphabetAssignment
    members: list
    prime_members: list  # F4'

    @property
    def g(self) -> int:
        return self.assignment.g

    @property
    def c(self) -> int:
        return 3 * self.g

    @property
    def d(self) -> int:
        return 2 * self.g

    def counts(self) -> dict:
        out = {f"F{i}": 0 for i in range(1, 6)}
        for mem in self.members:
            out[mem.family] += 1
        out["total"] = len(self.members)
        return out

    def by_family(self, family: str) -> list:
        return [m for m in self.members if m.family == family]

    def pattern(self, member: Member) -> pt.PartialPattern:
        cache = self.__dict__.setdefault("_pattern_cache", {})
        key = id(member)
        if key not in cache:
            cache[key] = _materialize(member, self.assignment)
        return cache[key]

    def pattern_set(self) -> pt.PatternSet:
        """F as an explicit PatternSet (metadata = provenance dicts)."""
        ps = pt.PatternSet()
        for mem in self.members:
            ps.add(self.pattern(mem), mem.describe())
        return ps

    def pattern_set_prime(self) -> pt.PatternSet:
        """F' = F together with B and B'."""
        ps = self.pattern_set()
        ps.add(self.assignment.matrix("B"), {"family": "B"})
        ps.add(self.assignment.matrix("B'"), {"family": "B'"})
        return ps

    def provenance(self) -> dict:
        return {
            "g": self.g, "c": self.c, "d": self.d, "toy": self.assignment.toy,
            "counts": self.counts(),
            "assignment": {n: list(m.word) for n, m in zip(self.assignment.names,
                                                           self.assignment.matrices)},
            "members": [m.describe() for m in self.members],
        }


def _materialize(member: Member, a: AlphabetAssignment) -> pt.PartialPattern:
    g = a.g
    if member.blocks is not None:
        return place_blocks(g, member.shape, member.blocks, a)
    p = dict(member.params)
    if member.family == "F1":
        base = a.matrix(p["matrix"])
        if p["insert"] == "row":
            return base.insert_zero_row(p["position"])
        return base.insert_zero_col(p["position"])
    if member.family == "F2":
        return f2_pattern(g, a.matrix(p["T"]), a.matrix(p["corner"]), p["shape"] == "tall",
                          p["middle"])
    if member.family == "F3":
        which = p["variant"]
        if which == "Q-below":
            return pt.PartialPattern(2 * g + 1, g, a.matrix("Q").ones)
        if which == "P-above":
            return pt.PartialPattern(2 * g + 1, g,
                                     [(r + g + 1, c) for r, c in a.matrix("P").ones])
        if which == "Q-right":
            return pt.PartialPattern(g, 2 * g + 1, a.matrix("Q").ones)
        if which == "P-left":
            return pt.PartialPattern(g, 2 * g + 1,
                                     [(r, c + g + 1) for r, c in a.matrix("P").ones])
    raise InputError(f"cannot materialize {member}")


def build_families(automaton: Automaton, assignment: AlphabetAssignment) -> ForbiddenBundle:
    """Materialize F1..F5 (as provenance records; patterns are built on demand)."""
    g = assignment.g
    members = []
    for name in assignment.names:
        for kind in ("row", "col"):
            for pos in range(1, g):
                members.append(Member("F1", "zero-" + kind,
                                      (("matrix", name), ("insert", kind), ("position", pos))))
    tnames = [assignment.vertex_symbol[v] for v in automaton.ids]
    for shape in ("wide", "tall"):
        for tn in tnames:
            for corner in ("B", "B'"):
                for middle in [None] + list(range(f2_middle_cells(g))):
                    members.append(Member("F2", shape, (("shape", shape), ("T", tn),
                                                        ("corner", corner), ("middle", middle))))
    for variant in ("Q-below", "P-above", "Q-right", "P-left"):
        members.append(Member("F3", variant, (("variant", variant),)))
    members += _w_members(automaton, assignment, primed=False)
    members += _f5_members(automaton, assignment)
    prime = _w_members(automaton, assignment, primed=True)
    return ForbiddenBundle(automaton, assignment, members, prime)


# -- block matrices ------------------------------------------------------------------


class BlockMatrix:
    """A (3n+2)g square permutation matrix stored as a grid of named g x g blocks."""

    def __init__(self, n: int, g: int, blocks: dict, N: Optional[int] = None):
        self.n = n
        self.g = g
        self.N = 3 * n + 2 if N is None else N
        self.blocks = dict(blocks)
        rows, cols = {}, {}
        for (I, J), sym in self.blocks.items():
            if not (1 <= I <= self.N and 1 <= J <= self.N):
                raise BlockCollision(f"block ({I}, {J}) outside the {self.N}x{self.N} grid")
            if I in rows or J in cols:
                other = (I, rows[I]) if I in rows else (cols[J], J)
                raise BlockCollision(f"blocks {other} and {(I, J)} share a block row or column")
            rows[I] = J
            cols[J] = I
        self._tau = rows

    @property
    def m(self) -> int:
        return self.N * self.g

    def is_full(self) -> bool:
        return len(self.blocks) == self.N

    def tau(self) -> tuple:
        """Block-level permutation as a one-line word (requires a full grid)."""
        if not self.is_full():
            raise InputError("block grid is not a block permutation")
        return tuple(self._tau[I] for I in range(1, self.N + 1))

    def symbol(self, I: int, J: int) -> Optional[str]:
        return self.blocks.get((I, J))

    def positions(self, *syms) -> list:
        return sorted(k for k, s in self.blocks.items() if s in syms)

    def replace(self, I: int, J: int, sym: str) -> "BlockMatrix":
        blocks = dict(self.blocks)
        if (I, J) not in blocks:
            raise InputError(f"no block at ({I}, {J})")
        blocks[(I, J)] = sym
        return BlockMatrix(self.n, self.g, blocks, self.N)

    def flip(self, I: int, J: int) -> "BlockMatrix":
        sym = self.blocks.get((I, J))
        if sym not in ("B", "B'"):
            raise InputError(f"block ({I}, {J}) is {sym!r}, not B or B'")
        return self.replace(I, J, "B'" if sym == "B" else "B")

    def matrix(self, assignment: AlphabetAssignment) -> pt.PartialPattern:
        return place_blocks(self.g, (self.N, self.N), [(I, J, s) for (I, J), s in
                                                       sorted(self.blocks.items())], assignment)

    def grid(self) -> list:
        out = [["."] * self.N for _ in range(self.N)]
        for (I, J), s in self.blocks.items():
            out[I - 1][J - 1] = s
        return out

    def pretty(self) -> str:
        return "\n".join(" ".join(f"{x:>2}" for x in row) for row in self.grid())

    def to_dict(self, assignment: Optional[AlphabetAssignment] = None) -> dict:
        out = {"n": self.n, "g": self.g, "N": self.N,
               "blocks": [[I, J, s] for (I, J), s in sorted(self.blocks.items())]}
        if assignment is not None:
            out["ones"] = sorted([r + 1, c + 1] for r, c in self.matrix(assignment).ones)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BlockMatrix":
        try:
            blocks = {(int(I), int(J)): str(s) for I, J, s in data["blocks"]}
            return cls(int(data["n"]), int(data["g"]), blocks, data.get("N"))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed block matrix: {exc}") from exc

    def __eq__(self, other):
        return (isinstance(other, BlockMatrix) and self.N == other.N and self.g == other.g
                and self.blocks == other.blocks)

    def __hash__(self):
        return hash((self.N, self.g, tuple(sorted(self.blocks.items()))))

    def __repr__(self):
        return f"BlockMatrix(n={self.n}, g={self.g}, {len(self.blocks)} blocks)"


def encode(automaton: Automaton, assignment: AlphabetAssignment, path: Sequence[str],
           pi: Sequence[int]) -> BlockMatrix:
    """M(gamma, pi): P, Q, the B and T diagonals, and E/Z blocks along pi (1-based)."""
    n = len(path)
    if len(pi) != n:
        raise InputError(f"pi has {len(pi)} entries for a path of {n} vertices")
    labels = automaton.labels
    blocks = {}

    def put(I, J, sym):
        if (I, J) in blocks:
            raise BlockCollision(f"block ({I}, {J}) requested twice")
        blocks[(I, J)] = sym

    put(2, 2, "P")
    put(3 * n + 1, 3 * n + 1, "Q")
    for i, v in enumerate(path, start=1):
        if v not in labels:
            raise InputError(f"unknown vertex {v!r}")
        put(3 * i + 2, 3 * i - 2, "B")
        put(3 * i - 2, 3 * i + 2, assignment.vertex_symbol[v])
        j = pi[i - 1]
        if not 1 <= j <= n:
            raise InputError(f"pi({i}) = {j} outside 1..{n}")
        put(3 * i, 3 * j, assignment.symbol_of_label(labels[v]))
    return BlockMatrix(n, assignment.g, blocks)


def parse_grid(text: str, g: int) -> BlockMatrix:
    """Inverse of :meth:`BlockMatrix.pretty` (``.`` marks a zero block)."""
    rows = [line.split() for line in text.strip().splitlines()]
    N = len(rows)
    blocks = {}
    for I, row in enumerate(rows, start=1):
        if len(row) != N:
            raise InputError("grid is not square")
        for J, s in enumerate(row, start=1):
            if s != ".":
                blocks[(I, J)] = s
    if (N - 2) % 3:
        raise InputError(f"grid size {N} is not of the form 3n+2")
    return BlockMatrix((N - 2) // 3, g, blocks)


# -- structured checks ---------------------------------------------------------------


def match_blocks(bm: BlockMatrix, entries: Sequence, pin: Optional[tuple] = None,
                 by_symbol: Optional[dict] = None) -> Optional[list]:
    """Find host blocks realizing a block-permutation template.

    ``entries`` is ``[(I, J, symbol), ...]``; ``pin = (entry_index, (I, J))``
    forces one entry onto a given host block.  Returns the chosen host blocks
    (in entry order) or None.
    """
    if by_symbol is None:
        by_symbol = {}
        for pos, s in bm.blocks.items():
            by_symbol.setdefault(s, []).append(pos)
    order = sorted(range(len(entries)), key=lambda k: entries[k][0])
    chosen = [None] * len(entries)
    if pin is not None:
        k0, pos0 = pin
        if bm.blocks.get(pos0) != entries[k0][2]:
            return None

    def consistent(k, pos):
        I, J, _ = entries[k]
        for t, other in enumerate(chosen):
            if other is None:
                continue
            It, Jt, _ = entries[t]
            if (It < I) != (other[0] < pos[0]) or (Jt < J) != (other[1] < pos[1]):
                return False
            if other == pos:
                return False
        return True

    def rec(idx):
        if idx == len(order):
            return True
        k = order[idx]
        if pin is not None and k == pin[0]:
            cands = [pin[1]]
        else:
            cands = by_symbol.get(entries[k][2], ())
        for pos in cands:
            if consistent(k, pos):
                chosen[k] = pos
                if rec(idx + 1):
                    return True
                chosen[k] = None
        return False

    return list(chosen) if rec(0) else None


def _used_names(bundle: ForbiddenBundle) -> tuple:
    return bundle.assignment.names


def tau_contains(bm: BlockMatrix, pattern: pt.PartialPattern, budget=pt.DEFAULT_BUDGET) -> bool:
    return pt.contains(pt.PermutationMatrix(bm.tau()), pattern, budget)


def f1_free(bm: BlockMatrix, bundle: ForbiddenBundle) -> bool:
    """No alphabet matrix in use appears spread over several blocks.

    For a block permutation (every nonzero block a simple matrix) this happens
    exactly when the block-level permutation contains that matrix.  In faithful
    mode every member contains L, so avoiding L settles it at once.
    """
    a = bundle.assignment
    tau = pt.PermutationMatrix(bm.tau())
    if not a.toy and not pt.contains(tau, pt.L_matrix()):
        return True
    return not any(pt.contains(tau, mat) for mat in a.matrices)


def f2_witness(bm: BlockMatrix, bundle: ForbiddenBundle) -> Optional[tuple]:
    ts = [pos for pos, s in bm.blocks.items() if s.startswith("T")]
    bs = bm.positions("B", "B'")
    for (IT, JT) in ts:
        for (IB, JB) in bs:
            if IB - IT >= 2 and JT - JB >= 5:
                return ("wide", (IT, JT), (IB, JB))
            if IB - IT >= 5 and JT - JB >= 2:
                return ("tall", (IT, JT), (IB, JB))
    return None


def f3_witness(bm: BlockMatrix) -> Optional[tuple]:
    N = bm.N
    for I, J in bm.positions("P"):
        if I >= 3:
            return ("P-above", (I, J))
        if J >= 3:
            return ("P-left", (I, J))
    for I, J in bm.positions("Q"):
        if N - I >= 2:
            return ("Q-below", (I, J))
        if N - J >= 2:
            return ("Q-right", (I, J))
    return None


def _by_symbol(bm):
    out = {}
    for pos, s in sorted(bm.blocks.items()):
        out.setdefault(s, []).append(pos)
    return out


def template_witness(bm: BlockMatrix, members: Sequence[Member]) -> Optional[tuple]:
    idx = _by_symbol(bm)
    for mem in members:
        if any(s not in idx for _, _, s in mem.blocks):
            continue
        hit = match_blocks(bm, mem.blocks, by_symbol=idx)
        if hit is not None:
            return (mem, hit)
    return None


def avoids_f_structured(bm: BlockMatrix, bundle: ForbiddenBundle) -> tuple:
    """(avoids F, witness description or None) for a full block grid."""
    if not f1_free(bm, bundle):
        return False, {"family": "F1"}
    w = f2_witness(bm, bundle)
    if w:
        return False, {"family": "F2", "shape": w[0], "T": w[1], "corner": w[2]}
    w = f3_witness(bm)
    if w:
        return False, {"family": "F3", "variant": w[0], "block": w[1]}
    w = template_witness(bm, bundle.by_family("F4"))
    if w:
        return False, {"family": "F4", **w[0].describe(), "blocks": w[1]}
    w = template_witness(bm, bundle.by_family("F5"))
    if w:
        return False, {"family": "F5", **w[0].describe(), "blocks": w[1]}
    return True, None


def marked_b(bm: BlockMatrix, bundle: ForbiddenBundle, pos: tuple) -> Optional[Member]:
    """An F4' member whose boxed B can sit on the block at ``pos``."""
    idx = _by_symbol(bm)
    for mem in bundle.prime_members:
        k = next(t for t, (I, J, _) in enumerate(mem.blocks) if (I, J) == mem.marked)
        if any(s not in idx for _, _, s in mem.blocks):
            continue
        if match_blocks(bm, mem.blocks, pin=(k, pos), by_symbol=idx) is not None:
            return mem
    return None


@dataclass
class FixedPointReport:
    conditions: dict                 # 1..4 -> True / False / None (undetermined)
    mode: str
    details: dict = field(default_factory=dict)
    agreement: Optional[bool] = None

    @property
    def fixed(self) -> bool:
        return all(self.conditions[k] is True for k in (1, 2, 3, 4))

    @property
    def failed(self) -> list:
        return [k for k in (1, 2, 3, 4) if self.conditions[k] is False]

    def to_dict(self) -> dict:
        return {"conditions": {str(k): v for k, v in self.conditions.items()},
                "fixed": self.fixed, "mode": self.mode, "details": self.details,
                "agreement": self.agreement}


def _structured(bm: BlockMatrix, bundle: ForbiddenBundle) -> FixedPointReport:
    if not bm.is_full():
        raise InputError("structured mode needs a full block permutation")
    a = bundle.assignment
    unknown = set(bm.blocks.values()) - set(a.names)
    if unknown:
        raise InputError(f"unknown block symbols {sorted(unknown)}")
    details = {}
    tau = pt.PermutationMatrix(bm.tau())
    c1, why = avoids_f_structured(bm, bundle)
    if why:
        details["1"] = why
    h = why is None or why.get("family") != "F1"
    bprime_blocks = bm.positions("B'")
    b_blocks = bm.positions("B")
    c2 = not bprime_blocks and not pt.contains(tau, a.matrix("B'"))
    if not c2:
        details["2"] = {"B'_blocks": bprime_blocks}
    c3 = bool(b_blocks) or pt.contains(tau, a.matrix("B"))
    c4 = None
    if h:
        unmarked = [pos for pos in b_blocks if marked_b(bm, bundle, pos) is None]
        c4 = not unmarked
        if unmarked:
            details["4"] = {"unmarked_B": unmarked}
    return FixedPointReport({1: c1, 2: c2, 3: c3, 4: c4}, "structured", details)


class _Budget:
    def __init__(self, total):
        self.left = total
        self.used = 0

    def contains(self, host, pattern, pins=None):
        if pattern.rows > host.rows or pattern.cols > host.cols:
            return False
        comp = pt._Compiled(pattern)
        s = pt._Search(comp, host.row_to_col, host.col_to_row, self.left, pins)
        try:
            return s.run()
        finally:
            self.used += s.nodes
            self.left -= s.nodes

    def each_occurrence(self, host, pattern, callback):
        """Feed occurrences to ``callback`` until it returns True."""
        comp = pt._Compiled(pattern)
        s = pt._Search(comp, host.row_to_col, host.col_to_row, self.left)
        s.on_found = callback
        try:
            s.run(collect=True)
        finally:
            self.used += s.nodes
            self.left -= s.nodes


def _generic(bm: BlockMatrix, bundle: ForbiddenBundle, budget: int) -> FixedPointReport:
    a = bundle.assignment
    g = a.g
    M = bm.matrix(a)
    bud = _Budget(budget)
    details = {}
    c1 = True
    for mem in bundle.members:
        if bud.contains(M, bundle.pattern(mem)):
            c1 = False
            details["1"] = mem.describe()
            break
    c2 = not bud.contains(M, a.matrix("B'"))
    # every occurrence of B must be the boxed B of some F4' occurrence
    state = {"seen": 0, "unmarked": None}

    def check(occ):
        rows = occ[0]
        state["seen"] += 1
        for mem in bundle.prime_members:
            I0 = mem.marked[0]
            pins = {(I0 - 1) * g + t: rows[t] for t in range(g)}
            if bud.contains(M, bundle.pattern(mem), pins):
                return False
        state["unmarked"] = [rows[0] + 1, rows[-1] + 1]
        return True

    bud.each_occurrence(M, a.matrix("B"), check)
    c3 = state["seen"] > 0
    c4 = state["unmarked"] is None
    if not c4:
        details["4"] = {"unmarked_rows": state["unmarked"]}
    details["nodes"] = bud.used
    return FixedPointReport({1: c1, 2: c2, 3: c3, 4: c4}, "generic", details)


def is_fixed_point(bm: BlockMatrix, bundle: ForbiddenBundle, mode: str = "structured",
                   budget: int = pt.DEFAULT_BUDGET) -> FixedPointReport:
    """Evaluate the four fixed-point conditions (avoid F, avoid B', contain B, all B marked)."""
    if mode == "structured":
        return _structured(bm, bundle)
    if mode == "generic":
        return _generic(bm, bundle, budget)
    if mode == "both":
        s = _structured(bm, bundle)
        gen = _generic(bm, bundle, budget)
        merged = dict(s.conditions)
        for k, v in merged.items():
            if v is None:
                merged[k] = gen.conditions[k]
        agree = all(s.conditions[k] is None or s.conditions[k] == gen.conditions[k]
                    for k in (1, 2, 3, 4))
        return FixedPointReport(merged, "both",
                                {"structured": s.details, "generic": gen.details}, agree)
    raise InputError(f"unknown mode {mode!r}")


# -- the involution ------------------------------------------------------------------


def in_domain(bm: BlockMatrix, bundle: ForbiddenBundle) -> bool:
    """Avoids F and contains B or B' (block grids only)."""
    ok, _ = avoids_f_structured(bm, bundle)
    return ok and bool(bm.positions("B", "B'"))


def is_blocked(bm: BlockMatrix, bundle: ForbiddenBundle, pos: tuple) -> bool:
    """Flipping the B/B' block at ``pos`` would leave the domain."""
    ok, _ = avoids_f_structured(bm.flip(*pos), bundle)
    return not ok


def phi(bm: BlockMatrix, bundle: ForbiddenBundle) -> BlockMatrix:
    """Flip the leftmost unblocked B or B' (ties: topmost)."""
    if not in_domain(bm, bundle):
        raise NotInDomain("matrix contains a member of F or has no B/B' block")
    for I, J in sorted(bm.positions("B", "B'"), key=lambda p: (p[1], p[0])):
        if not is_blocked(bm, bundle, (I, J)):
            return bm.flip(I, J)
    raise NoUnblockedBlock("every B and B' block is blocked: the matrix is a fixed point")


# -- fixed points from balanced paths ------------------------------------------------


def enumerate_fixed(automaton: Automaton, assignment: AlphabetAssignment, n: int,
                    bundle: Optional[ForbiddenBundle] = None, verify: bool = False,
                    budget: int = pt.DEFAULT_BUDGET) -> list:
    """M(gamma, pi_gamma) for every balanced path gamma of length n."""
    out = []
    for path in balanced_paths(automaton, n, budget):
        run = run_path(automaton, path)
        bm = encode(automaton, assignment, path, run.involution)
        if verify:
            if bundle is None:
                bundle = build_families(automaton, assignment)
            rep = is_fixed_point(bm, bundle, "structured")
            if not rep.fixed:
                raise InvariantError(f"M(gamma, pi_gamma) for {path} fails {rep.failed}")
        out.append(bm)
    return out
