import pytest

from mcprover import shell, variants
from mcprover.kernel import Signature, kind_complete
from mcprover.rewrite import Rule
from mcprover.variants import (DepthBoundExceeded, FvpSubtheory, VALID,
                               INVALID, UNKNOWN, check_fvp, compute_variants,
                               cvu_unify, var_sat_decide)


def test_variants_no_rules(mset):
    sig = mset.compiled.sig
    sub = FvpSubtheory(sig, [], depth=8)
    a = sig.app("a", [])
    vs = compute_variants(sig, a, sub)
    assert vs == [(a, {})]


def test_variants_collapse(mset):
    sig = mset.compiled.sig
    sub = mset.compiled.fvp
    x = sig.var("x", "Elt")
    u = sig.var("U", "MSet")
    t = sig.app("u", [x, u])
    vs = compute_variants(sig, t, sub)
    terms = {v for v, _ in vs}
    assert t in terms
    # the U -> mt collapse leaves a bare element variant
    assert any(v.sort == "Elt" for v in terms)
    collapse = [th for v, th in vs if v.sort == "Elt"]
    assert any(th.get(u) is sig.app("mt", []) for th in collapse)


def test_variants_acu_lhs():
    text = """theory MEMB2
  sorts Elt MSet Bool
  subsort Elt < MSet
  op true : -> Bool [ctor prec 0]
  op a : -> Elt [ctor prec 2]
  op mt : -> MSet [ctor prec 1]
  op _u_ : MSet MSet -> MSet [assoc comm id(mt) prec 10]
  op _in_ : Elt MSet -> Bool [prec 20]
  var X : Elt
  var S : MSet
  eq X in (X u S) = true
endtheory
"""
    lt = shell.parse_theory(text)
    in_rules = [r for r in lt.compiled.eqth.term_rules if r.lhs.op == "in"]
    shapes = sorted(r.lhs.args[1].op if r.lhs.args[1].is_app else "var"
                    for r in in_rules)
    # x in x  and  x in (x u S)
    assert len(in_rules) == 2


def test_cvu_crossing(mset):
    sig = mset.compiled.sig
    x, y = sig.var("x", "Elt"), sig.var("y", "Elt")
    u, v = sig.var("U", "NeMSet"), sig.var("V", "NeMSet")
    sols = cvu_unify(sig, [(sig.app("u", [x, u]), sig.app("u", [y, v]))],
                     mset.compiled.fvp)
    assert sols
    shared = [s for s in sols if s.get(u) is not None and s[u].is_app]
    assert shared


def test_cvu_no_unifier(natural):
    sig = natural.compiled.sig
    n = sig.var("n", "Nat")
    one = sig.app("1", [])
    tru = sig.app("true", [])
    pairs = [(sig.app(">", [n, one]), tru),
             (sig.app("+", [n, n]), n)]
    assert cvu_unify(sig, pairs, natural.compiled.fvp) == []


def test_cvu_identity(natural):
    sig = natural.compiled.sig
    x = sig.var("x", "Nat")
    assert cvu_unify(sig, [(x, x)], natural.compiled.fvp) == [{}]


def test_cvu_gt_single(natural):
    sig = natural.compiled.sig
    n = sig.var("n", "Nat")
    sols = cvu_unify(sig, [(sig.app(">", [n, sig.app("1", [])]),
                            sig.app("true", []))], natural.compiled.fvp)
    assert len(sols) == 1
    val = sols[0][n]
    assert val.is_app and val.op == "+"


def test_varsat_valid_diseq(natural):
    sig = natural.compiled.sig
    n = sig.var("n", "Nat")
    one, tru = sig.app("1", []), sig.app("true", [])
    verdict, _ = var_sat_decide(
        sig, [(sig.app(">", [n, one]), tru), (sig.app("+", [n, n]), n)],
        [], natural.compiled.fvp)
    assert verdict == VALID


def test_varsat_cancellation_equivalence(natural):
    sig = natural.compiled.sig
    z1, z2, z3 = (sig.var(n, "Nat") for n in ("z1", "z2", "z3"))
    plus = lambda a, b: sig.app("+", [a, b])
    v1, _ = var_sat_decide(sig, [(plus(z1, z2), plus(z1, z3))],
                           [[(z2, z3)]], natural.compiled.fvp)
    v2, _ = var_sat_decide(sig, [(z2, z3)],
                           [[(plus(z1, z2), plus(z1, z3))]],
                           natural.compiled.fvp)
    assert v1 == VALID and v2 == VALID


def test_varsat_invalid_with_witness(natural):
    sig = natural.compiled.sig
    zero = sig.app("0", [])
    verdict, witness = var_sat_decide(sig, [(zero, zero)], [],
                                      natural.compiled.fvp)
    assert verdict == INVALID
    assert witness == {}


def test_check_fvp_natural(natural):
    assert check_fvp(natural.compiled.sig, natural.compiled.fvp,
                     depth=12) is None


def test_check_fvp_empty(np_theory):
    sig = np_theory.compiled.sig
    sub = FvpSubtheory(sig, [], depth=4)
    assert check_fvp(sig, sub) is None


def test_check_fvp_peano_plus_suspect(np_theory):
    sig = np_theory.compiled.sig
    x, y = sig.var("X", "Nat"), sig.var("Y", "Nat")
    rules = [Rule("p0", sig.app("+", [x, sig.app("0", [])]), x),
             Rule("ps", sig.app("+", [x, sig.app("s", [y])]),
                  sig.app("s", [sig.app("+", [x, y])]))]
    sub = FvpSubtheory(sig, rules, depth=6, ops=frozenset(["+", "0", "s"]))
    suspect = check_fvp(sig, sub, depth=6)
    assert suspect is not None


def test_variant_soundness(mset):
    sig = mset.compiled.sig
    sub = mset.compiled.fvp
    from mcprover.kernel import apply_subst
    x = sig.var("x", "Elt")
    u = sig.var("U", "MSet")
    t = sig.app("u", [x, u])
    for v, theta in compute_variants(sig, t, sub):
        inst = sub.normalize(apply_subst(sig, t, theta))
        assert inst is v


def test_varsat_ground_agreement(natural):
    # on ground formulas the decision agrees with direct evaluation
    sig = natural.compiled.sig
    eqth = natural.compiled.eqth
    fvp = natural.compiled.fvp
    one, zero = sig.app("1", []), sig.app("0", [])
    tru = sig.app("true", [])
    cases = [
        ([(sig.app("+", [one, one]), sig.app("+", [one, one]))], []),
        ([(one, zero)], []),
        ([], [[(one, one)]]),
        ([], [[(one, zero)]]),
    ]
    for prem, concl in cases:
        verdict, _ = var_sat_decide(sig, prem, concl, fvp)
        prem_holds = all(eqth.ground_eval(eqth.eq(u, v)) for u, v in prem)
        if concl:
            concl_holds = all(any(eqth.ground_eval(eqth.eq(u, v))
                                  for u, v in d) for d in concl)
        else:
            concl_holds = False  # empty conclusion list reads as falsehood
        truth = (not prem_holds) or concl_holds
        assert (verdict == VALID) == truth


def test_cvu_ground_completeness_oracle(natural):
    # every ground constructor unifier (depth <= 3) is an instance of a
    # returned unifier
    import itertools
    import random

    from mcprover import unify
    from mcprover.kernel import apply_subst
    from test_unify import is_instance_of_some

    sig = natural.compiled.sig
    eqth = natural.compiled.eqth
    fvp = natural.compiled.fvp
    rng = random.Random(307)
    n, m = sig.var("n", "Nat"), sig.var("m", "Nat")
    one, zero, tru, fls = (sig.app(o, []) for o in ("1", "0", "true",
                                                    "false"))

    def s1_term(depth):
        if depth == 0 or rng.random() < 0.45:
            return rng.choice([n, m, one, zero])
        return sig.app("+", [s1_term(depth - 1), s1_term(depth - 1)])

    grounds = variants.ground_ctor_terms(sig, "Nat", 3, cap=12)
    problems = 0
    missed = 0
    while problems < 30:
        if rng.random() < 0.6:
            pair = (s1_term(2), s1_term(2))
        else:
            pair = (sig.app(">", [s1_term(1), s1_term(1)]),
                    rng.choice([tru, fls]))
        problems += 1
        try:
            sols = cvu_unify(sig, [pair], fvp)
        except DepthBoundExceeded:
            continue
        for gn in grounds:
            for gm in grounds:
                binding = {n: gn, m: gm}
                linst = fvp.normalize(apply_subst(sig, pair[0], binding))
                rinst = fvp.normalize(apply_subst(sig, pair[1], binding))
                if linst is not rinst:
                    continue
                pv = pair[0].vars | pair[1].vars
                sub_binding = {v: t for v, t in binding.items() if v in pv}
                if not is_instance_of_some(sig, sols, sub_binding):
                    missed += 1
    assert missed == 0
