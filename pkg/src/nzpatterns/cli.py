"""``nzp`` command line: every pipeline step as a subcommand with a uniform report."""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time

from . import automaton as au
from . import construction as cs
from . import patterns as pt
from . import precursive as pr
from . import tmcompile as tmc
from .errors import BudgetExceeded, InvariantError, NoUnblockedBlock, NZError

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4, 5


class RunReport:
    def __init__(self, command, params):
        self.command = command
        self.params = params
        self.results = {}
        self.divergences = []
        self.budget = {}
        self.started = time.perf_counter()

    def diverge(self, what, computed, claimed):
        self.divergences.append({"quantity": what, "computed": computed, "claimed": claimed,
                                 "diverges": computed != claimed})

    def to_dict(self):
        return {
            "command": self.command,
            "params": self.params,
            "results": self.results,
            "budget": self.budget,
            "divergences": self.divergences,
            "timing": {"seconds": round(time.perf_counter() - self.started, 6)},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_jsonable)

    def to_text(self):
        lines = [f"# {self.command}"]
        for k, v in self.results.items():
            if isinstance(v, str) and "\n" in v:
                lines.append(f"{k}:")
                lines.append(v)
            else:
                lines.append(f"{k}: {_short(v)}")
        for d in self.divergences:
            mark = "DIVERGES" if d["diverges"] else "matches"
            lines.append(f"{d['quantity']}: computed {d['computed']} vs claimed {d['claimed']} {mark}")
        return "\n".join(lines)


def _jsonable(obj):
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    return str(obj)


def _short(v):
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True, default=_jsonable)
    return str(v)


# -- argument helpers ----------------------------------------------------------------


def _default_budget():
    raw = os.environ.get("NZ_BUDGET")
    if raw:
        try:
            return int(float(raw))
        except ValueError:
            pass
    return au.DEFAULT_BUDGET


def _add_common(p, suppress):
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--budget", type=int, help="work budget (default $NZ_BUDGET or 10^7)",
                   **({} if suppress else {"default": None}), **kw)
    p.add_argument("--seed", type=int, **({} if suppress else {"default": 0}), **kw)
    p.add_argument("--json", action="store_true", **kw)


def _add_automaton(p, required=True):
    grp = p.add_mutually_exclusive_group(required=required)
    grp.add_argument("--builtin", choices=["gamma1", "gamma3"])
    grp.add_argument("--automaton", metavar="FILE", help="automaton JSON")


def _get_automaton(args):
    if getattr(args, "builtin", None):
        return au.builtin(args.builtin)
    return au.load_automaton(args.automaton)


def _add_alpha(p):
    p.add_argument("--g", type=int, default=10, help="block size")
    p.add_argument("--toy", action="store_true",
                   help="relaxed alphabet: all simple g x g permutations (not faithful)")
    p.add_argument("--max-g", type=int, default=pt.MAX_ALPHABET_G)


def _words(text):
    return text.replace(",", " ").split()


def _bundle(args, aut):
    a = cs.assign_alphabet(aut, args.g, pt.AlphabetCache(), toy=args.toy, max_g=args.max_g)
    return a, cs.build_families(aut, a)


def _block_matrix(args, aut, a):
    if getattr(args, "matrix", None):
        with open(args.matrix) as fh:
            return cs.BlockMatrix.from_dict(json.load(fh))
    if not args.path:
        raise NZError("give --matrix FILE or --path")
    path = _words(args.path)
    if args.pi:
        pi = [int(x) for x in _words(args.pi)]
    else:
        run = au.run_path(aut, path)
        if not run.balanced:
            raise NZError(f"path is not balanced ({run.reason}); pass --pi explicitly")
        pi = list(run.involution)
    bm = cs.encode(aut, a, path, pi)
    for spec in getattr(args, "flip", None) or []:
        I, J = (int(x) for x in spec.split(","))
        bm = bm.flip(I, J)
    return bm


def _add_matrix_source(p):
    p.add_argument("--matrix", metavar="FILE", help="block matrix JSON (from encode --json)")
    p.add_argument("--path", help="vertex ids separated by spaces or commas")
    p.add_argument("--pi", help="permutation images pi(1) .. pi(n); default pi_gamma")
    p.add_argument("--flip", action="append", metavar="I,J",
                   help="swap B/B' at block (I, J) after encoding (repeatable)")


# -- subcommands ---------------------------------------------------------------------


def cmd_validate(args, rep):
    aut = _get_automaton(args)
    problems = au.validate(aut)
    rep.results.update(valid=not problems, problems=problems, vertices=aut.m,
                       edges=len(aut.edges), labels=aut.r,
                       three_vertex_paths=len(aut.three_vertex_paths()))


def cmd_count_paths(args, rep):
    aut = _get_automaton(args)
    if args.n is not None:
        rep.results["count"] = au.count_balanced(aut, args.n, args.budget)
    else:
        counts = au.balanced_counts(aut, args.upto, args.budget)
        rep.results["counts"] = counts[1:]  # n = 1 .. upto
        rep.results["nonzero"] = [n for n, c in enumerate(counts) if c]


def cmd_alpha(args, rep):
    word = au.gamma1_word(args.upto)
    rep.results["word"] = word
    if args.check:
        counts = au.balanced_counts(au.builtin("gamma1"), args.upto, args.budget)
        dp = "".join(str(c) for c in counts[1:])
        rep.results["dp_agrees"] = dp == word
        if dp != word:
            raise InvariantError("DP word differs from the closed form")


def cmd_run_path(args, rep):
    aut = _get_automaton(args)
    run = au.run_path(aut, _words(args.path), trace=args.trace)
    rep.results.update(balanced=run.balanced, length=len(run.path))
    if run.balanced:
        rep.results["involution"] = list(run.involution)
        rep.results["cycles"] = " ".join(f"({i} {j})" for i, j in run.cycles()) or "()"
    else:
        rep.results["failure_step"] = run.failure_step
        rep.results["reason"] = run.reason
    if args.trace:
        rep.results["trace"] = [{"x": list(x), "y": list(y)} for x, y in run.trace]


def _patterns(path, fmt):
    return pt.load_patterns(path, fmt)


def cmd_count_avoiders(args, rep):
    pats = _patterns(args.patterns, args.format)
    rep.results["patterns"] = len(pats)
    rep.results["count"] = pt.count_avoiders(pats, args.n, args.budget, limit=args.limit)


def cmd_expand(args, rep):
    pats = _patterns(args.patterns, args.format)
    out = pt.PatternSet()
    for p in pats:
        for q in pt.expand_partial(p, args.max_size):
            out.add(q)
    rep.results["input"] = len(pats)
    rep.results["expanded"] = len(out)
    text = pt.format_patterns(out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        rep.results["written"] = args.out
    else:
        rep.results["patterns"] = [" ".join(map(str, q.to_permutation().word)) for q in out]


def cmd_wilf_mod2(args, rep):
    s1 = _patterns(args.set1, args.format)
    s2 = _patterns(args.set2, args.format)
    res = pt.wilf_mod2(s1, s2, args.upto, args.budget, limit=args.limit)
    rep.results["agree"] = res.agree
    rep.results["counts1"] = res.counts1
    rep.results["counts2"] = res.counts2
    if not res.agree:
        n = res.first_divergence
        rep.results["first_divergence"] = n
        rep.results["at_divergence"] = [res.counts1[-1], res.counts2[-1]]


def cmd_alphabet(args, rep):
    alpha = pt.alphabet(args.g, toy=args.toy, max_g=args.max_g)
    rep.results["size"] = len(alpha)
    rep.results["faithful"] = not args.toy
    if args.list:
        rep.results["members"] = [" ".join(map(str, m.word)) for m in alpha]
    if args.check_lprime and args.g == 10 and not args.toy:
        members = {m.word for m in alpha}
        ins = [w for w in pt.single_insertions(pt.L_PRIME_WORD) if pt.is_simple(w)]
        rep.results["lprime_simple_insertions"] = len(ins)
        rep.results["lprime_all_members"] = all(w in members for w in ins)


def _family_report(rep, aut, bundle, args):
    counts = bundle.counts()
    rep.results["counts"] = counts
    rep.results["c"] = bundle.c
    rep.results["d"] = bundle.d
    rep.results["required_matrices"] = bundle.assignment.required
    rep.results["alphabet_size"] = bundle.assignment.available
    if getattr(args, "builtin", None) == "gamma1" and args.g == 10 and not args.toy:
        for k, v in cs.CLAIMED_COUNTS_GAMMA1.items():
            rep.diverge(f"|{k}|" if k != "total" else "|F|", counts[k], v)
        rep.diverge("three-vertex paths", len(aut.three_vertex_paths()), 71)


def cmd_stats(args, rep):
    aut = _get_automaton(args)
    _, bundle = _bundle(args, aut)
    _family_report(rep, aut, bundle, args)


def cmd_build_f(args, rep):
    aut = _get_automaton(args)
    _, bundle = _bundle(args, aut)
    _family_report(rep, aut, bundle, args)
    if args.out:
        ps = bundle.pattern_set_prime() if args.prime else bundle.pattern_set()
        with open(args.out + ".patterns", "w") as fh:
            fh.write(pt.format_patterns(ps))
        with open(args.out + ".json", "w") as fh:
            json.dump(bundle.provenance(), fh, sort_keys=True, default=_jsonable)
        rep.results["written"] = [args.out + ".patterns", args.out + ".json"]


def cmd_encode(args, rep):
    aut = _get_automaton(args)
    a = cs.assign_alphabet(aut, args.g, toy=args.toy, max_g=args.max_g)
    bm = _block_matrix(args, aut, a)
    rep.results["blocks"] = bm.N
    rep.results["size"] = bm.m
    rep.results["grid"] = bm.pretty()
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(bm.to_dict(a if args.ones else None), fh, sort_keys=True)
        rep.results["written"] = args.out
    if args.json:
        rep.results["matrix"] = bm.to_dict()


def cmd_verify_fixed(args, rep):
    aut = _get_automaton(args)
    a, bundle = _bundle(args, aut)
    bm = _block_matrix(args, aut, a)
    report = cs.is_fixed_point(bm, bundle, args.mode, args.budget)
    rep.results.update(report.to_dict())
    if report.agreement is False:
        raise InvariantError("structured and generic verdicts disagree")


def cmd_phi(args, rep):
    aut = _get_automaton(args)
    a, bundle = _bundle(args, aut)
    bm = _block_matrix(args, aut, a)
    try:
        out = cs.phi(bm, bundle)
    except NoUnblockedBlock:
        rep.results["fixed_point"] = True
        return
    rep.results["fixed_point"] = False
    changed = [k for k in bm.blocks if bm.blocks[k] != out.blocks[k]]
    rep.results["flipped"] = changed
    rep.results["grid"] = out.pretty()
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out.to_dict(), fh, sort_keys=True)


def cmd_enumerate_fixed(args, rep):
    aut = _get_automaton(args)
    a, bundle = _bundle(args, aut)
    mats = cs.enumerate_fixed(aut, a, args.n, bundle, verify=args.verify, budget=args.budget)
    rep.results["count"] = len(mats)
    rep.results["balanced_paths"] = au.count_balanced(aut, args.n, args.budget)
    if args.show:
        rep.results["grids"] = "\n\n".join(m.pretty() for m in mats)


def _recurrence(args):
    if args.catalan:
        return pr.catalan_recurrence()
    if args.rec:
        return pr.load_recurrence(args.rec)
    raise NZError("give --rec FILE or --catalan")


def cmd_prec_eval(args, rep):
    rec = _recurrence(args)
    terms = pr.evaluate(rec, args.upto)
    rep.results["terms"] = [str(t) for t in terms]
    rep.results["mod2"] = "".join(str(t & 1) for t in terms)


def cmd_prec_scan(args, rep):
    if args.word:
        word = args.word
    elif args.gamma1:
        word = au.gamma1_word(args.gamma1)
    else:
        word = pr.mod2_word(_recurrence(args), args.upto)
    rep.results["length"] = len(word)
    missing = pr.missing_subword(word, args.maxlen)
    rep.results["missing"] = missing if missing is not None else "all-present"


def cmd_compile_tm(args, rep):
    tm = tmc.load_machine(args.tm)
    aut = tmc.compile_machine(tm)
    problems = au.validate(aut)
    if problems:
        raise InvariantError("compiled automaton is invalid: " + "; ".join(problems))
    rep.results.update(vertices=aut.m, edges=len(aut.edges), symbols=list(tm.symbols))
    steps = tm.run(args.max_steps)
    rep.results["halts_within"] = steps
    if steps is not None:
        rep.results["predicted_length"] = tmc.halting_path_length(tm, args.max_steps)
    if args.scan:
        counts = au.balanced_counts(aut, args.scan, args.budget)
        rep.results["balanced_lengths"] = [n for n, c in enumerate(counts) if c]
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(aut.to_dict(), fh, indent=1)
        rep.results["written"] = args.out


# -- parser --------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="nzp", description=__doc__)
    _add_common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "check the two-stack automaton conditions")
    _add_automaton(p)

    p = add("count-paths", cmd_count_paths, "G(Gamma, n) by configuration DP")
    _add_automaton(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n", type=int)
    g.add_argument("--upto", type=int)

    p = add("alpha", cmd_alpha, "closed-form alpha word of Gamma_1")
    p.add_argument("--upto", type=int, required=True)
    p.add_argument("--check", action="store_true", help="compare with the DP")

    p = add("run-path", cmd_run_path, "run a vertex sequence through the stacks")
    _add_automaton(p)
    p.add_argument("--path", required=True)
    p.add_argument("--trace", action="store_true")

    fmt = {"choices": ["auto", "matrix", "perm"], "default": "auto"}
    p = add("count-avoiders", cmd_count_avoiders, "C_n of a pattern file")
    p.add_argument("--patterns", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", **fmt)
    p.add_argument("--limit", type=int, default=pt.MAX_COUNT_N)

    p = add("expand", cmd_expand, "partial patterns to permutation patterns")
    p.add_argument("--patterns", required=True)
    p.add_argument("--format", **fmt)
    p.add_argument("--max-size", type=int, default=9)
    p.add_argument("--out")

    p = add("wilf-mod2", cmd_wilf_mod2, "compare avoider counts modulo 2")
    p.add_argument("--set1", required=True)
    p.add_argument("--set2", required=True)
    p.add_argument("--upto", type=int, required=True)
    p.add_argument("--format", **fmt)
    p.add_argument("--limit", type=int, default=pt.MAX_COUNT_N)

    p = add("alphabet", cmd_alphabet, "enumerate A_g")
    _add_alpha(p)
    p.add_argument("--list", action="store_true")
    p.add_argument("--check-lprime", action="store_true")

    for name, func, help_ in (("build-f", cmd_build_f, "materialize F and F'"),
                              ("stats", cmd_stats, "per-family counts")):
        p = add(name, func, help_)
        _add_automaton(p)
        _add_alpha(p)
        if name == "build-f":
            p.add_argument("--out", metavar="PREFIX")
            p.add_argument("--prime", action="store_true", help="write F' instead of F")

    p = add("encode", cmd_encode, "build M(gamma, pi)")
    _add_automaton(p)
    _add_alpha(p)
    _add_matrix_source(p)
    p.add_argument("--out")
    p.add_argument("--ones", action="store_true", help="include the sparse ones in --out")

    p = add("verify-fixed", cmd_verify_fixed, "check the fixed-point conditions")
    _add_automaton(p)
    _add_alpha(p)
    _add_matrix_source(p)
    p.add_argument("--mode", choices=["structured", "generic", "both"], default="structured")

    p = add("phi", cmd_phi, "apply the B/B' involution")
    _add_automaton(p)
    _add_alpha(p)
    _add_matrix_source(p)
    p.add_argument("--out")

    p = add("enumerate-fixed", cmd_enumerate_fixed, "fixed points from balanced paths")
    _add_automaton(p)
    _add_alpha(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--show", action="store_true")

    for name, func, help_ in (("prec-eval", cmd_prec_eval, "evaluate a P-recurrence"),
                              ("prec-scan", cmd_prec_scan, "shortest missing subword")):
        p = add(name, func, help_)
        p.add_argument("--rec", metavar="FILE")
        p.add_argument("--catalan", action="store_true")
        p.add_argument("--upto", type=int, default=200)
        if name == "prec-scan":
            p.add_argument("--word")
            p.add_argument("--gamma1", type=int, metavar="N", help="use Gamma_1's word to N")
            p.add_argument("--maxlen", type=int, default=8)

    p = add("compile-tm", cmd_compile_tm, "Turing machine to two-stack automaton")
    p.add_argument("--tm", required=True)
    p.add_argument("--out")
    p.add_argument("--scan", type=int, default=0, help="list balanced lengths up to N")
    p.add_argument("--max-steps", type=int, default=1000)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.budget is None:
        args.budget = _default_budget()
    random.seed(args.seed)
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "json")}
    rep = RunReport(args.command, params)
    rep.budget = {"limit": args.budget}
    code = EXIT_OK
    try:
        args.func(args, rep)
    except BudgetExceeded as exc:
        rep.results["error"] = str(exc)
        rep.budget.update(exc.detail)
        code = EXIT_BUDGET
    except InvariantError as exc:
        rep.results["error"] = str(exc)
        code = EXIT_INVARIANT
    except (NZError, OSError, ValueError) as exc:
        rep.results["error"] = str(exc)
        code = EXIT_INPUT
    out = rep.to_json() if args.json else rep.to_text()
    stream = sys.stdout if code == EXIT_OK else sys.stderr
    print(out, file=stream)
    return code


if __name__ == "__main__":
    sys.exit(main())
