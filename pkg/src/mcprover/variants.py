"""Folding variant narrowing and its two consumers: constructor variant
unification and variant-based satisfiability for quantifier-free formulas
over the finite-variant fragment of a theory.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import unify
from .kernel import apply_subst
from .rewrite import RewriteTheory


class DepthBoundExceeded(Exception):
    pass


@dataclass
class FvpSubtheory:
    sig: object
    rules: list
    depth: int = 32
    ops: frozenset = frozenset()

    def __post_init__(self):
        self.engine = RewriteTheory(self.sig, self.rules)

    def normalize(self, t):
        return self.engine.normalize(t)


# ---------------------------------------------------------------------------
# Folding variant narrowing over term tuples


def compute_variants(sig, t, sub: FvpSubtheory):
    """Complete set of most-general variants of t, as (term, subst) pairs."""
    out = _variants_tuple(sig, (t,), sub)
    return [(terms[0], theta) for terms, theta in out]


def _variants_tuple(sig, terms, sub: FvpSubtheory):
    tvars = set()
    for t in terms:
        tvars |= t.vars
    start = tuple(sub.normalize(t) for t in terms)
    found = [(start, {})]
    frontier = [(start, {})]
    ctr = itertools.count(1)
    for _depth in range(sub.depth):
        if not frontier:
            return found
        nxt = []
        for state, theta in frontier:
            for cand in _narrow_once(sig, state, theta, tvars, sub, ctr):
                if not _folded(sig, cand, found, tvars):
                    found.append(cand)
                    nxt.append(cand)
        frontier = nxt
    if frontier:
        raise DepthBoundExceeded(
            f"variant narrowing still active at depth {sub.depth}")
    return found


def _narrow_once(sig, state, theta, tvars, sub, ctr):
    for i, term in enumerate(state):
        for pos, at in _nonvar_positions(term):
            for rule in sub.rules:
                if not rule.lhs.is_app or at.op != rule.lhs.op:
                    continue
                rrule, _ = rule.rename(sig, f"n{next(ctr)}")
                for alpha in unify.unify_b0(sig, [(at, rrule.lhs)]):
                    # replace before instantiating: paths refer to the
                    # original tree, substitution then distributes
                    replaced = _replace_pos(sig, term, pos, rrule.rhs)
                    new = []
                    for j, u in enumerate(state):
                        base = replaced if j == i else u
                        new.append(sub.normalize(
                            apply_subst(sig, base, alpha)))
                    comp = {}
                    normalized = True
                    for x in tvars:
                        v = apply_subst(sig, theta.get(x, x), alpha)
                        vn = sub.normalize(v)
                        if vn is not v:
                            normalized = False
                            break
                        comp[x] = vn
                    if not normalized:
                        continue
                    comp = {x: v for x, v in comp.items() if v is not x}
                    yield (tuple(new), comp)


def _replace_pos(sig, whole, pos, new):
    def go(t, p):
        if not p:
            return new
        args = list(t.args)
        args[p[0]] = go(args[p[0]], p[1:])
        return sig.app(t.op, args)

    return go(whole, pos)


def _nonvar_positions(t, prefix=()):
    if t.is_var:
        return
    yield prefix, t
    for i, a in enumerate(t.args):
        yield from _nonvar_positions(a, prefix + (i,))


def _folded(sig, cand, found, tvars):
    cterms, ctheta = cand
    for fterms, ftheta in found:
        theta = {}
        ok = True
        for ft, ct in zip(fterms, cterms):
            got = None
            for th in unify._match(sig, ft, ct, theta):
                got = th
                break
            if got is None:
                ok = False
                break
            theta = got
        if not ok:
            continue
        for x in tvars:
            pat = ftheta.get(x, x)
            subj = ctheta.get(x, x)
            got = None
            for th in unify._match(sig, pat, subj, theta):
                got = th
                break
            if got is None:
                ok = False
                break
            theta = got
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# Constructor variant unification


def cvu_unify(sig, pairs, sub: FvpSubtheory, max_solutions=128):
    """Complete finite set of constructor unifiers of the equation system
    modulo the variant fragment."""
    pairs = list(pairs)
    if not pairs:
        return [{}]
    pvars = set()
    for u, v in pairs:
        pvars |= u.vars | v.vars
    flat = tuple(t for pair in pairs for t in pair)
    sols = []
    try:
        variant_set = _variants_tuple(sig, flat, sub)
        for terms, theta in variant_set:
            vpairs = [(terms[2 * i], terms[2 * i + 1])
                      for i in range(len(pairs))]
            for gamma in unify.unify_b0(sig, vpairs):
                alpha = {}
                for x in pvars:
                    val = apply_subst(sig, theta.get(x, x), gamma)
                    alpha[x] = sub.normalize(val)
                sols.extend(_ctor_refinements(sig, sub, alpha))
    except unify.UnifyError as e:
        # an oversized unification problem means the unifier set could be
        # incomplete, which callers must treat as a hard refusal
        raise DepthBoundExceeded(str(e))
    cleaned = []
    for alpha in sols:
        cleaned.append({x: v for x, v in alpha.items()
                        if x in pvars and v is not x})
    return unify._prune_subsumed(sig, pvars, cleaned)[:max_solutions]


def _ctor_refinements(sig, sub, alpha, bound=64):
    """Split a variant unifier into sort refinements whose range consists
    of constructor terms; a binding like x+y with x too general becomes
    the constructor-typed cases of x."""
    out = []
    stack = [alpha]
    steps = 0
    while stack:
        steps += 1
        if steps > bound:
            raise DepthBoundExceeded(
                "constructor refinement of a variant unifier diverged")
        cur = stack.pop()
        offender = None
        for x, v in sorted(cur.items(), key=lambda kv: kv[0].name):
            if not sig.is_ctor_term(v):
                offender = v
                break
        if offender is None:
            out.append(cur)
            continue
        w = _refinable_var(sig, offender)
        if w is None:
            continue  # no instance of this binding is a constructor term
        for repl in _ctor_alternatives(sig, w):
            theta = {w: repl}
            nxt = {x: sub.normalize(apply_subst(sig, v, theta))
                   for x, v in cur.items()}
            for y in repl.vars:
                nxt.setdefault(y, y)
            stack.append(nxt)
    return out


def _refinable_var(sig, t):
    """A variable of t whose sort admits strictly lower constructor
    cases; None when t is constructor-hopeless."""
    if t.is_var:
        return t if _ctor_alternatives(sig, t) else None
    if t.skolem is not None:
        return None
    for a in t.args:
        if not sig.is_ctor_term(a):
            w = _refinable_var(sig, a)
            if w is not None:
                return w
    # all arguments are fine, so some argument's sort is too general for
    # every constructor declaration; refine the first argument variable
    for a in t.args:
        for w in sorted(a.vars, key=lambda v: v.name):
            if _ctor_alternatives(sig, w):
                return w
    return None


def _ctor_alternatives(sig, w):
    """Covering set of one-step refinements for a variable: a fresh
    variable per maximal strict subsort plus one constructor expansion per
    declaration producing exactly this sort."""
    alts = []
    lower = [s for s in sig.sorts.sorts
             if s != w.sort and sig.sorts.leq(s, w.sort)]
    maximal = [s for s in lower
               if not any(t != s and sig.sorts.leq(s, t) for t in lower)]
    for s in sorted(maximal):
        alts.append(unify.fresh_var(sig, s, w.name + "~"))
    for name in sorted(sig.ops()):
        for d in sig.decls(name):
            if d.ctor and not d.kinded and d.result == w.sort:
                args = [unify.fresh_var(sig, s, w.name + "~")
                        for s in d.args]
                alts.append(sig.app(name, args))
    return alts


# ---------------------------------------------------------------------------
# Variant satisfiability


VALID = "valid"
INVALID = "invalid"
UNKNOWN = "unknown"


def var_sat_decide(sig, premise, conclusions, sub: FvpSubtheory,
                   diseq_depth=6):
    """Decide validity of `premise -> /\\ conclusions` in the initial model
    of the variant fragment.

    `premise` is a list of equation pairs, `conclusions` a list of
    disjunctions (each a list of pairs).  Returns (verdict, witness).
    """
    if not conclusions:
        disjuncts = [(list(premise), [])]
    else:
        disjuncts = [(list(premise), [(u, v) for (u, v) in delta])
                     for delta in [_negate(d) for d in conclusions]]
    unknown = False
    for eqs, diseqs in disjuncts:
        verdict, witness = _disjunct_sat(sig, eqs, diseqs, sub, diseq_depth)
        if verdict == "sat":
            return INVALID, witness
        if verdict == "unknown":
            unknown = True
    return (UNKNOWN, None) if unknown else (VALID, None)


def _negate(delta):
    return [(u, v) for (u, v) in delta]


def _disjunct_sat(sig, eqs, diseqs, sub, depth):
    try:
        unifiers = cvu_unify(sig, eqs, sub)
    except DepthBoundExceeded:
        return "unknown", None
    any_unknown = False
    for alpha in unifiers:
        ds = [(sub.normalize(apply_subst(sig, u, alpha)),
               sub.normalize(apply_subst(sig, v, alpha)))
              for (u, v) in diseqs]
        if any(u is v for u, v in ds):
            continue  # this branch cannot satisfy the disequalities
        if not ds:
            ground = _ground_instance(sig, alpha, sub)
            return "sat", ground
        res, wit = _search_diseq_instance(sig, ds, sub, depth)
        if res == "sat":
            return "sat", _merge(sig, alpha, wit, sub)
        if res == "unknown":
            any_unknown = True
    if any_unknown:
        return "unknown", None
    return "unsat", None


def _search_diseq_instance(sig, diseqs, sub, depth):
    dvars = sorted({v for u, w in diseqs for v in (u.vars | w.vars)},
                   key=lambda v: v.name)
    if not dvars:
        ok = all(u is not v for u, v in diseqs)
        return ("sat", {}) if ok else ("unsat", None)
    for d in range(1, depth + 1):
        pools = []
        fresh_at_depth = False
        for v in dvars:
            pool = ground_ctor_terms(sig, v.sort, d, cap=60)
            pools.append(pool)
            if pool != ground_ctor_terms(sig, v.sort, d - 1, cap=60):
                fresh_at_depth = True
        if d > 1 and not fresh_at_depth:
            return "unsat", None  # finite sorts fully enumerated
        tried = 0
        for combo in itertools.product(*pools):
            tried += 1
            if tried > 20000:
                break
            rho = dict(zip(dvars, combo))
            good = True
            for u, w in diseqs:
                un = sub.normalize(apply_subst(sig, u, rho))
                wn = sub.normalize(apply_subst(sig, w, rho))
                if un is wn:
                    good = False
                    break
            if good:
                return "sat", rho
    return "unknown", None


def _ground_instance(sig, alpha, sub):
    out = dict(alpha)
    rng = set()
    for v in alpha.values():
        rng |= v.vars
    for v in sorted(rng, key=lambda x: x.name):
        pool = ground_ctor_terms(sig, v.sort, 3)
        if pool:
            out[v] = pool[0]
    return out


def _merge(sig, alpha, rho, sub):
    out = {x: sub.normalize(apply_subst(sig, v, rho))
           for x, v in alpha.items()}
    out.update(rho)
    return out


_ground_cache = {}


def ground_ctor_terms(sig, sort, depth, cap=400):
    key = (id(sig), sort, depth)
    hit = _ground_cache.get(key)
    if hit is not None:
        return hit
    if depth <= 0:
        _ground_cache[key] = []
        return []
    smaller = ground_ctor_terms(sig, sort, depth - 1, cap)
    pool = dict.fromkeys(smaller, True)
    comp = sig.sorts.component(sort)
    for name in sorted(sig.ops()):
        for d in sig.decls(name):
            if not d.ctor or sig.sorts.component(d.result) != comp:
                continue
            if not d.args:
                t = sig.app(name, [])
                if sig.sorts.leq(t.sort, sort):
                    pool[t] = True
                continue
            if depth == 1:
                continue
            arg_pools = [ground_ctor_terms(sig, s, depth - 1, cap)
                         for s in d.args]
            if any(not p for p in arg_pools):
                continue
            for combo in itertools.product(*arg_pools):
                try:
                    t = sig.app(name, list(combo))
                except Exception:
                    continue
                if sig.sorts.leq(t.sort, sort) and sig.is_ctor_term(t):
                    pool[t] = True
                if len(pool) > cap:
                    break
    out = sorted(pool, key=lambda t: t.key)[:cap]
    _ground_cache[key] = out
    return out


# ---------------------------------------------------------------------------
# Bounded FVP verification


def check_fvp(sig, sub: FvpSubtheory, depth=None):
    """Terminating-variant check on every rule left side and every
    depth-one generic term over the fragment's operators; returns None or
    a suspect term."""
    bound = depth or sub.depth
    probe = FvpSubtheory(sig, sub.rules, depth=bound, ops=sub.ops)
    todo = [r.lhs for r in sub.rules]
    for name in sorted(sub.ops or []):
        for d in sig.decls(name):
            if d.kinded or not d.args:
                continue
            args = [sig.var(f"%f{i}", s) for i, s in enumerate(d.args)]
            todo.append(sig.app(name, args))
    for t in todo:
        try:
            compute_variants(sig, t, probe)
        except DepthBoundExceeded:
            return t
    return None
