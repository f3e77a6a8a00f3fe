"""Equality, matching, and unification modulo commutativity and
associativity-commutativity.

Terms are canonical (flattened, sorted arguments), so equality modulo the
axioms is structural.  AC unification goes through the usual linear
Diophantine basis enumeration on flattened argument multisets; order-sorted
filtering happens after the unsorted solving step.
"""

from __future__ import annotations

import itertools
from collections import Counter

from .kernel import apply_subst, compose


class UnifyError(Exception):
    pass


def b0_equal(t, u):
    return t is u or t == u


_fresh_counter = itertools.count(1)


def fresh_var(sig, sort, base="%v"):
    return sig.var(f"{base}{next(_fresh_counter)}", sort)


# ---------------------------------------------------------------------------
# Matching


def match_b0(sig, pattern, subject, theta=None):
    """Complete set of matchers sending pattern to subject modulo the axioms.

    Returns a list of substitutions (possibly empty).
    """
    out = []
    for th in _match(sig, pattern, subject, dict(theta or {})):
        if th not in out:
            out.append(th)
    return out


def _match(sig, p, s, theta):
    if p.is_var:
        bound = theta.get(p)
        if bound is not None:
            if b0_equal(bound, s):
                yield theta
            return
        if sig.sorts.leq(s.sort, p.sort):
            th = dict(theta)
            th[p] = s
            yield th
        return
    if not s.is_app or s.op != p.op or p.skolem != s.skolem:
        return
    if p.skolem is not None:
        if b0_equal(p, s):
            yield theta
        return
    ax = sig.axioms.get(p.op, "")
    if ax == "AC":
        yield from _match_ac(sig, p.op, list(p.args), list(s.args), theta,
                             remainder=False)
    elif ax == "C":
        (p1, p2), (s1, s2) = p.args, s.args
        for th in _match(sig, p1, s1, theta):
            yield from _match(sig, p2, s2, th)
        for th in _match(sig, p1, s2, theta):
            yield from _match(sig, p2, s1, th)
    else:
        if len(p.args) != len(s.args):
            return
        stack = [theta]
        for pa, sa in zip(p.args, s.args):
            stack = [th2 for th in stack for th2 in _match(sig, pa, sa, th)]
            if not stack:
                return
        yield from stack


def match_ac_extension(sig, op, pattern_args, subject_args, theta=None):
    """AC matching with remainder: matches the pattern argument multiset
    against a sub-multiset of the subject, yielding (theta, leftover)."""
    for th, rem in _match_ac(sig, op, list(pattern_args), list(subject_args),
                             dict(theta or {}), remainder=True):
        yield th, rem


def _match_ac(sig, op, pargs, sargs, theta, remainder):
    # bound pattern variables contribute their binding as literal elements
    lits, pats, vars_ = [], [], []
    for p in pargs:
        if p.is_var and p in theta:
            b = theta[p]
            if b.is_app and b.op == op and b.skolem is None:
                lits.extend(b.args)
            else:
                lits.append(b)
        elif p.is_var:
            vars_.append(p)
        else:
            pats.append(p)

    def go_lits(ls, subj, th):
        if not ls:
            yield from go_pats(pats, subj, th)
            return
        taken = _take_multiset(subj, [ls[0]])
        if taken is not None:
            yield from go_lits(ls[1:], taken, th)

    def go_pats(nv, subj, th):
        if not nv:
            yield from distribute(vars_, subj, th)
            return
        p = nv[0]
        seen = set()
        for i, s in enumerate(subj):
            if id(s) in seen:
                continue
            seen.add(id(s))
            rest = subj[:i] + subj[i + 1:]
            for th2 in _match(sig, p, s, th):
                yield from go_pats(nv[1:], rest, th2)

    def distribute(vs, subj, th):
        if not vs:
            if remainder:
                yield th, tuple(subj)
            elif not subj:
                yield th
            return
        v = vs[0]
        if v in th:  # became bound while distributing an earlier duplicate
            b = th[v]
            parts = list(b.args) if (b.is_app and b.op == op
                                     and b.skolem is None) else [b]
            used = _take_multiset(subj, parts)
            if used is None:
                return
            yield from distribute(vs[1:], used, th)
            return
        n = len(subj)
        if n == 0:
            return
        only = len(vs) == 1 and not remainder
        sizes = [n] if only else range(1, n + 1)
        for k in sizes:
            for idxs in itertools.combinations(range(n), k):
                chosen = [subj[i] for i in idxs]
                if k == 1:
                    cand = chosen[0]
                else:
                    cand = sig.app(op, chosen)
                if not sig.sorts.leq(cand.sort, v.sort):
                    continue
                th2 = dict(th)
                th2[v] = cand
                rest = [subj[i] for i in range(n) if i not in idxs]
                yield from distribute(vs[1:], rest, th2)

    yield from go_lits(lits, list(sargs), theta)


def _take_multiset(pool, parts):
    pool = list(pool)
    for p in parts:
        for i, s in enumerate(pool):
            if b0_equal(p, s):
                del pool[i]
                break
        else:
            return None
    return pool


# ---------------------------------------------------------------------------
# Sort specialization: lowering variable sorts so a term fits a target sort


def specialize(sig, t, target):
    """Substitutions theta (over t's variables, into fresh lower-sorted
    variables) with ls(t theta) <= target; [] when impossible."""
    if sig.sorts.leq(t.sort, target):
        return [{}]
    if t.is_var:
        out = []
        for s in sig.sorts.max_lower_bounds(t.sort, target):
            out.append({t: fresh_var(sig, s, t.name + "%")})
        return out
    if t.skolem is not None or not t.args:
        return []
    results = []
    for assign in _arg_sort_options(sig, t.op, len(t.args), target):
        partial = [{}]
        ok = True
        for a, s in zip(t.args, assign):
            nxt = []
            for th in partial:
                a2 = apply_subst(sig, a, th)
                for th2 in specialize(sig, a2, s):
                    nxt.append(compose(sig, th, th2))
            partial = nxt
            if not partial:
                ok = False
                break
        if ok:
            results.extend(partial)
    dedup = []
    for th in results:
        if th not in dedup:
            dedup.append(th)
    return dedup[:8]


def _arg_sort_options(sig, op, n, target):
    decls = [d for d in sig.decls(op)]
    if sig.axioms.get(op) == "AC" and n > 2:
        # fold binary declarations; collect per-argument sort vectors
        outs = []

        def go(i, acc_sort, vec):
            if i == n:
                if sig.sorts.leq(acc_sort, target):
                    outs.append(tuple(vec))
                return
            for d in decls:
                if len(d.args) != 2:
                    continue
                if acc_sort is None:
                    continue
            return

        # simpler: enumerate per-arg sorts from binary decl argument sorts
        cand = sorted({s for d in decls if len(d.args) == 2 for s in d.args})
        for vec in itertools.product(cand, repeat=n):
            acc = vec[0]
            good = True
            for s in vec[1:]:
                acc = _fold(sig, decls, acc, s)
                if acc is None:
                    good = False
                    break
            if good and sig.sorts.leq(acc, target):
                outs.append(vec)
        return outs[:16]
    outs = []
    for d in decls:
        if len(d.args) == n and sig.sorts.leq(d.result, target):
            outs.append(d.args)
    return outs


def _fold(sig, decls, s1, s2):
    best = None
    for d in decls:
        if len(d.args) == 2 and sig.sorts.leq(s1, d.args[0]) \
                and sig.sorts.leq(s2, d.args[1]):
            if best is None or sig.sorts.leq(d.result, best):
                best = d.result
    return best


# ---------------------------------------------------------------------------
# Unification


class UnifProblem:
    """A system of equations, with an optional set of fresh-constant names
    treated as variables (the rigidity flip used when constants from the
    goal theory must unify like variables)."""

    def __init__(self, pairs, flex_constants=()):
        self.pairs = list(pairs)
        self.flex = frozenset(flex_constants)


def unify_b0(sig, problem, max_solutions=256):
    if isinstance(problem, UnifProblem):
        pairs = problem.pairs
        flex = problem.flex
    else:
        pairs = list(problem)
        flex = frozenset()
    if flex:
        pairs = [(_unfreeze(sig, a, flex), _unfreeze(sig, b, flex))
                 for a, b in pairs]
    pvars = set()
    for a, b in pairs:
        pvars |= a.vars | b.vars
    sols = []
    for sigma in _solve(sig, list(pairs), {}):
        sigma = _restrict_idempotent(sig, sigma)
        sols.append({x: u for x, u in sigma.items() if x in pvars})
        if len(sols) >= max_solutions * 4:
            break
    return _prune_subsumed(sig, pvars, sols)[:max_solutions]


def _unfreeze(sig, t, flex):
    if t.is_var:
        return t
    if t.skolem is not None and t.op in flex:
        return sig.var(t.op, t.sort)
    if not t.args:
        return t
    return sig.app(t.op, [_unfreeze(sig, a, flex) for a in t.args])


def _restrict_idempotent(sig, sigma):
    for _ in range(len(sigma) + 1):
        nxt = {x: apply_subst(sig, u, sigma) for x, u in sigma.items()}
        if nxt == sigma:
            break
        sigma = nxt
    return {x: u for x, u in sigma.items() if u is not x}


def _prune_subsumed(sig, pvars, sols):
    """Best-effort minimization: drop unifiers that are instances (modulo
    the axioms) of another one in the set."""
    order = sorted(range(len(sols)),
                   key=lambda i: sum(getattr(u, "size", 1)
                                     for u in sols[i].values()))
    kept = []
    for i in order:
        if not any(_subsumes(sig, pvars, k, sols[i]) for k in kept):
            kept.append(sols[i])
    return kept


def _subsumes(sig, pvars, general, special):
    theta = {}
    for x in sorted(pvars, key=lambda v: v.name):
        pat = general.get(x, x)
        subj = special.get(x, x)
        found = None
        for th in _match(sig, pat, subj, theta):
            found = th
            break
        if found is None:
            return False
        theta = found
    return True


def _solve(sig, pairs, sigma):
    if not pairs:
        yield sigma
        return
    a, b = pairs[0]
    rest = pairs[1:]
    a = apply_subst(sig, a, sigma)
    b = apply_subst(sig, b, sigma)
    if b0_equal(a, b):
        yield from _solve(sig, rest, sigma)
        return
    if a.is_var or b.is_var:
        x, u = (a, b) if a.is_var else (b, a)
        if u.is_var:
            if sig.sorts.leq(u.sort, x.sort):
                yield from _bind(sig, x, u, rest, sigma)
            elif sig.sorts.leq(x.sort, u.sort):
                yield from _bind(sig, u, x, rest, sigma)
            else:
                for s in sig.sorts.max_lower_bounds(x.sort, u.sort):
                    z = fresh_var(sig, s)
                    for out in _bind(sig, x, z, [], sigma):
                        yield from _bind(sig, u, z, rest, out)
            return
        if x in u.vars:
            return
        if sig.sorts.leq(u.sort, x.sort):
            yield from _bind(sig, x, u, rest, sigma)
        else:
            for th in specialize(sig, u, x.sort):
                u2 = apply_subst(sig, u, th)
                sig2 = compose(sig, sigma, th)
                if x in u2.vars:
                    continue
                yield from _bind(sig, x, u2, rest, sig2)
        return
    if a.op != b.op or a.skolem != b.skolem:
        return
    if a.skolem is not None:
        return  # distinct constants
    ax = sig.axioms.get(a.op, "")
    if ax == "AC":
        for extra, binds in _ac_unify(sig, a.op, list(a.args), list(b.args)):
            newpairs = extra + [(x, u) for x, u in binds]
            yield from _solve(sig, newpairs + rest, sigma)
        return
    if ax == "C":
        (a1, a2), (b1, b2) = a.args, b.args
        yield from _solve(sig, [(a1, b1), (a2, b2)] + rest, sigma)
        yield from _solve(sig, [(a1, b2), (a2, b1)] + rest, sigma)
        return
    if len(a.args) != len(b.args):
        return
    yield from _solve(sig, list(zip(a.args, b.args)) + rest, sigma)


def _bind(sig, x, u, rest, sigma):
    yield from _solve(sig, rest, compose(sig, sigma, {x: u}))


# -- AC core


def _ac_unify(sig, op, largs, rargs):
    """Yield (new_pairs, bindings) covering AC unification of the two
    flattened argument multisets."""
    lc = Counter(largs)
    rc = Counter(rargs)
    for t in list(lc):
        if t in rc:
            k = min(lc[t], rc[t])
            lc[t] -= k
            rc[t] -= k
            if lc[t] == 0:
                del lc[t]
            if rc[t] == 0:
                del rc[t]
    if not lc and not rc:
        yield ([], [])
        return
    if not lc or not rc:
        return
    latoms = list(lc.items())
    ratoms = list(rc.items())
    cols = [(t, m, 0) for t, m in latoms] + [(t, m, 1) for t, m in ratoms]
    lcoef = [m for _, m, side in cols if side == 0]
    rcoef = [m for _, m, side in cols if side == 1]
    basis = _dioph_basis(lcoef, rcoef)
    if not basis:
        return
    nonvar_idx = [i for i, (t, _, _) in enumerate(cols) if not t.is_var]
    var_idx = [i for i, (t, _, _) in enumerate(cols) if t.is_var]
    arg_bound = _max_arg_sort(sig, op)
    nb = len(basis)
    if nb > 14:
        raise UnifyError(f"AC unification basis too large ({nb}) for {op}")
    for mask in range(1, 1 << nb):
        chosen = [basis[i] for i in range(nb) if mask >> i & 1]
        tot = [sum(v[i] for v in chosen) for i in range(len(cols))]
        if any(t == 0 for t in tot):
            continue
        if any(tot[i] != 1 for i in nonvar_idx):
            continue
        # assign sorts to the fresh variable of each chosen vector
        ok = True
        fresh = []
        for v in chosen:
            units = [cols[i][0].sort for i in var_idx
                     if v[i] > 0 and tot[i] == 1 and v[i] == 1]
            sort = _glb_sort(sig, units, arg_bound)
            if sort is None:
                ok = False
                break
            fresh.append(fresh_var(sig, sort))
        if not ok:
            continue
        pairs, binds = [], []
        for i, (t, mult, side) in enumerate(cols):
            parts = []
            for v, c in zip(chosen, fresh):
                parts.extend([c] * v[i])
            if t.is_var:
                val = parts[0] if len(parts) == 1 else sig.app(op, parts)
                binds.append((t, val))
            else:
                pairs.append((parts[0], t))
        yield (pairs, binds)


def _max_arg_sort(sig, op):
    best = None
    for d in sig.decls(op):
        for s in d.args:
            if best is None or sig.sorts.leq(best, s):
                best = s
    return best


def _glb_sort(sig, needed, fallback):
    if not needed:
        return fallback
    cands = sig.sorts.sorts
    lows = [s for s in cands if all(sig.sorts.leq(s, n) for n in needed)]
    maxi = [s for s in lows
            if not any(t != s and sig.sorts.leq(s, t) for t in lows)]
    if not maxi:
        return None
    return sorted(maxi)[0]


def _dioph_basis(lcoef, rcoef):
    """Minimal nonzero solutions of sum(l_i x_i) = sum(r_j y_j) over
    non-negative integers, bounded per the classical minimal-solution
    bounds."""
    lb = max(rcoef) if rcoef else 0
    rb = max(lcoef) if lcoef else 0
    sols = []
    lranges = [range(0, lb + 1)] * len(lcoef)
    rranges = [range(0, rb + 1)] * len(rcoef)
    for xs in itertools.product(*lranges):
        sl = sum(c * x for c, x in zip(lcoef, xs))
        if sl == 0 and any(xs):
            continue
        for ys in itertools.product(*rranges):
            sr = sum(c * y for c, y in zip(rcoef, ys))
            if sl != sr or (sl == 0 and sr == 0):
                continue
            vec = tuple(xs) + tuple(ys)
            if not any(vec):
                continue
            sols.append(vec)
    minimal = []
    for v in sorted(sols, key=sum):
        if not any(all(w[i] <= v[i] for i in range(len(v))) and w != v
                   for w in minimal):
            minimal.append(v)
    return minimal
