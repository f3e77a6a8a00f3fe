"""Inductive theories, goals, proof trees, and the inference rules.

Eleven simplification rules run unattended; the remaining nine take
parameters from a script or an interactive session.  Every rule either
refuses with an error (no tree change) or records an edge whose replay
regenerates identical children.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import groundcc, hyps, rpo, unify, variants
from .eqpred import EQ, EqPredTheory, Multiclause, mk_multiclause
from .hyps import mk_clause
from .kernel import apply_subst, subst_skolems
from .rewrite import BudgetExhausted, EqCond, Rule, RewriteTheory

SIMPLIFICATION_RULES = ("eps", "cvul", "cvufr", "subl", "subr", "ns", "cs",
                        "erl", "err", "icc", "varsat")
INDUCTIVE_RULES = ("gsi", "ni", "exists", "le", "sp", "cas", "va", "eq",
                   "cut")


class RuleError(Exception):
    pass


class NotApplicable(RuleError):
    pass


class UnverifiedGeneratorSet(RuleError):
    pass


class NotSufficientlyComplete(RuleError):
    pass


class IncompleteUnifiers(RuleError):
    pass


class UnifierExists(RuleError):
    pass


class OccursCheck(RuleError):
    pass


class VariableEscape(RuleError):
    pass


class ConditionUnprovable(RuleError):
    pass


class NoMatch(RuleError):
    pass


class NotInstalled(RuleError):
    pass


class OrderViolation(RuleError):
    pass


class IncompleteInterpretation(RuleError):
    pass


# ---------------------------------------------------------------------------
# Generator sets, subterms, subcalls


@dataclass
class GeneratorSet:
    name: str
    sort: str
    patterns: tuple
    verified_depth: int = 0


def pst_b0(sig, t, bound_sort=None):
    """Proper subterms modulo the axioms, one representative per class,
    optionally bounded by least sort."""
    out = {}

    def collect(u):
        if u.is_var or not u.args:
            return
        args = u.args
        for a in args:
            out[a] = True
            collect(a)
        if sig.is_ac(u.op) and len(args) >= 3:
            n = len(args)
            for k in range(2, n):
                for idxs in itertools.combinations(range(n), k):
                    sub = sig.app(u.op, [args[i] for i in idxs])
                    out[sub] = True

    collect(t)
    res = [u for u in out
           if bound_sort is None or sig.sorts.leq(u.sort, bound_sort)]
    return sorted(res, key=lambda u: u.key)


def ssc(sig, rule: Rule):
    """Proper subterm subcalls of a defining rule."""
    f = rule.lhs.op
    uargs = rule.lhs.args
    if not all(sig.is_ctor_term(a) for a in uargs):
        return []
    calls = []

    def find_calls(t):
        if t.is_var or not t.is_app:
            return
        if t.op == f and t.skolem is None \
                and all(sig.is_ctor_term(a) for a in t.args) \
                and len(t.args) == len(uargs):
            calls.append(t)
        for a in t.args:
            find_calls(a)

    find_calls(rule.rhs)
    for c in rule.conds:
        for t in _cond_terms(c):
            find_calls(t)

    arrangements = [uargs]
    if (sig.is_c(f) or sig.is_ac(f)) and len(uargs) == 2:
        arrangements.append((uargs[1], uargs[0]))
    psts = {}

    def pst_of(u):
        if u not in psts:
            psts[u] = set(pst_b0(sig, u))
        return psts[u]

    out = []
    for call in calls:
        for arr in arrangements:
            strict = False
            ok = True
            for w, u in zip(call.args, arr):
                if w is u:
                    continue
                if w in pst_of(u):
                    strict = True
                else:
                    ok = False
                    break
            if ok and strict:
                if call not in out:
                    out.append(call)
                break
    return out


def _cond_terms(c):
    from .rewrite import EqCond, MatchCond, OrderCond, RewriteCond
    if isinstance(c, EqCond):
        return [c.lhs, c.rhs]
    if isinstance(c, MatchCond):
        return [c.rhs]
    if isinstance(c, RewriteCond):
        return [c.formula]
    return []


def check_generator_set(sig, eqth, gs: GeneratorSet, depth=4):
    """Bounded coverage check: every ground constructor term of the sort up
    to the depth must be an instance of some pattern, directly or after
    normalizing a pattern instance."""
    for p in gs.patterns:
        names = [v.name for v in _linear_vars(p)]
        if len(names) != len(set(names)):
            raise UnverifiedGeneratorSet(
                f"pattern {p!r} in {gs.name} is not linear")
    terms = variants.ground_ctor_terms(sig, gs.sort, depth)
    term_eng = RewriteTheory(sig, eqth.term_rules)
    for t in terms:
        covered = False
        for p in gs.patterns:
            if unify.match_b0(sig, p, t):
                covered = True
                break
        if covered:
            continue
        for p in gs.patterns:
            pvars = sorted(p.vars, key=lambda v: v.name)
            pools = [variants.ground_ctor_terms(sig, v.sort, depth)
                     for v in pvars]
            if any(not pool for pool in pools):
                continue
            count = 0
            for combo in itertools.product(*pools):
                count += 1
                if count > 5000:
                    break
                rho = dict(zip(pvars, combo))
                try:
                    inst = term_eng.normalize(apply_subst(sig, p, rho))
                except Exception:
                    continue
                if inst is t:
                    covered = True
                    break
            if covered:
                break
        if not covered:
            return t
    gs.verified_depth = depth
    return None


def _linear_vars(t):
    out = []

    def go(u):
        if u.is_var:
            out.append(u)
        else:
            for a in u.args:
                go(a)

    go(t)
    return out


# ---------------------------------------------------------------------------
# Theories and goals


class CompiledTheory:
    def __init__(self, sig, eqth: EqPredTheory, fvp, name="theory",
                 source_hash="", infix=()):
        self.sig = sig
        self.eqth = eqth
        self.fvp = fvp
        self.name = name
        self.source_hash = source_hash
        self.infix = set(infix)
        self.prec0 = rpo.PrecedenceTable(sig)
        self.gensets = {}
        self.equivalences = {}
        self.lemmas = {}
        self.defined = {}
        for r in eqth.term_rules:
            if r.lhs.is_app:
                self.defined.setdefault(r.lhs.op, []).append(r)
        self.suff_complete = {}
        for f in self.defined:
            self.suff_complete[f] = self._check_suff_complete(f)

    def _check_suff_complete(self, f, depth=4):
        sig = self.sig
        decls = [d for d in sig.decls(f) if not d.kinded]
        eng = RewriteTheory(sig, self.eqth.term_rules)
        for d in decls:
            pools = [variants.ground_ctor_terms(sig, s, depth, cap=25)
                     for s in d.args]
            if any(not p for p in pools):
                continue
            count = 0
            for combo in itertools.product(*pools):
                count += 1
                if count > 400:
                    break
                try:
                    t = sig.app(f, list(combo))
                    nf = eng.normalize(t)
                except Exception:
                    return False
                if not sig.is_ctor_term(nf):
                    return False
        return True


class IndTheory:
    def __init__(self, base: CompiledTheory, consts=(), hset=None):
        self.base = base
        self.consts = tuple(consts)
        self.hyps = hset or hyps.HypothesisSet()
        self._prec = None
        self._rules = None

    @property
    def prec(self):
        if self._prec is None:
            self._prec = self.base.prec0.extend(self.consts)
        return self._prec

    @property
    def hyp_rules(self):
        if self._rules is None:
            self._rules = hyps.compile_rules(self.base.eqth, self.hyps,
                                             self.prec)
        return self._rules

    def extend(self, new_consts, new_clauses):
        consts = self.consts + tuple(
            c for c in new_consts if c not in self.consts)
        prec = self.base.prec0.extend(consts)
        hset = hyps.simp_transform(
            self.base.eqth, list(self.hyps.clauses) + list(new_clauses),
            prec)
        out = IndTheory(self.base, consts, hset)
        return out

    def const_named(self, name):
        for c in self.consts:
            if c.op == name:
                return c
        return None


PENDING = "pending"
CLOSED = "closed"
REFUTED = "refuted"


@dataclass
class Goal:
    gid: int
    theory: IndTheory
    mc: Multiclause
    status: str = PENDING
    skolem_sig: tuple = ()   # ((name, argsorts, result), ...) for exists
    note: str = ""


@dataclass
class Edge:
    rule: str
    params: dict
    parent: int
    children: tuple
    transcript: str = ""


class ProofTree:
    def __init__(self, theory: CompiledTheory, root_mc: Multiclause,
                 skolem_sig=()):
        self.theory = theory
        self.nodes = {}
        self.children = {}
        self.edges = []
        self._gid = 0
        self._const = 0
        self._marks = []
        self.version = 0
        root = Goal(self._fresh_gid(), IndTheory(theory), root_mc,
                    skolem_sig=tuple(skolem_sig))
        self.nodes[root.gid] = root
        self.children[root.gid] = []
        self.root = root.gid

    def _fresh_gid(self):
        self._gid += 1
        return self._gid

    # -- bookkeeping

    def goal(self, gid):
        return self.nodes[gid]

    def pending(self):
        out = []

        def walk(gid):
            g = self.nodes[gid]
            kids = self.children[gid]
            if not kids:
                if g.status == PENDING:
                    out.append(g)
            else:
                for k in kids:
                    walk(k)

        walk(self.root)
        return out

    def closed(self):
        return not self.pending() and not self.refuted()

    def refuted(self):
        return any(g.status == REFUTED for g in self.nodes.values())

    def fresh_const(self, origin, sort):
        self._const += 1
        return self.theory.sig.skolem_const(f"{origin}#{self._const}", sort,
                                            origin)

    def rule_applications(self):
        return len(self.edges)

    def _attach(self, parent: Goal, rule, params, results, transcript=""):
        kids = []
        for thy, mc, extra in results:
            g = Goal(self._fresh_gid(), thy, mc, **extra)
            self.nodes[g.gid] = g
            self.children[g.gid] = []
            kids.append(g.gid)
        if not kids:
            parent.status = CLOSED
        self.children[parent.gid] = kids
        self.edges.append(Edge(rule, params, parent.gid, tuple(kids),
                               transcript))
        self.version += 1
        return [self.nodes[k] for k in kids]

    def _refute(self, parent: Goal, rule, params, transcript=""):
        parent.status = REFUTED
        self.edges.append(Edge(rule, params, parent.gid, (), transcript))
        self.version += 1
        return []

    def undo(self):
        if not self.edges:
            return False
        edge = self.edges.pop()
        parent = self.nodes[edge.parent]
        for k in edge.children:
            self._drop(k)
        self.children[parent.gid] = []
        parent.status = PENDING
        if self._marks:
            self._gid, self._const = self._marks.pop()
        self.version += 1
        return True

    def _drop(self, gid):
        for k in self.children.get(gid, []):
            self._drop(k)
        self.children.pop(gid, None)
        self.nodes.pop(gid, None)

    # -- rule dispatch

    def apply(self, rule, gid, params=None):
        params = params or {}
        g = self.nodes.get(gid)
        if g is None or self.children.get(gid) or g.status != PENDING:
            raise RuleError(f"goal {gid} is not pending")
        fn = RULES.get(rule)
        if fn is None:
            raise RuleError(f"unknown rule {rule}")
        mark = (self._gid, self._const)
        try:
            kids = fn(self, g, params)
        except Exception:
            self._gid, self._const = mark
            raise
        self._marks.append(mark)
        return kids


# ---------------------------------------------------------------------------
# Formula helpers


def mc_term(eqth, mc):
    return eqth.mc_term(mc)


def mc_vars(mc):
    vs = set()
    for a in mc.premise:
        vs |= a.vars
    for d in mc.concl:
        for a in d:
            vs |= a.vars
    return vs


def mc_consts(mc, theory):
    present = set()

    def scan(t):
        if t.is_app:
            if t.skolem is not None:
                present.add(t.op)
            for a in t.args:
                scan(a)

    for a in mc.premise:
        scan(a)
    for d in mc.concl:
        for a in d:
            scan(a)
    return [c for c in theory.consts if c.op in present]


def mc_map(sig, mc, f):
    prem = [sig.app(EQ, [f(a.args[0]), f(a.args[1])]) for a in mc.premise]
    concl = [[sig.app(EQ, [f(a.args[0]), f(a.args[1])]) for a in d]
             for d in mc.concl]
    return mk_multiclause(prem, concl)


def mc_subst(sig, mc, theta):
    return mc_map(sig, mc, lambda t: apply_subst(sig, t, theta))


def mc_unskolem(sig, mc, mapping):
    return mc_map(sig, mc, lambda t: subst_skolems(sig, t, mapping))


def mc_equal(a: Multiclause, b: Multiclause):
    return a == b


def mc_equal_mod_renaming(sig, a, b):
    """Equality modulo a bijective renaming of variables and fresh
    constants."""
    fw, bw = {}, {}

    def terms_eq(t, u):
        if t.is_var and u.is_var:
            if t.sort != u.sort:
                return False
            if t in fw:
                return fw[t] is u
            if u in bw:
                return False
            fw[t] = u
            bw[u] = t
            return True
        if t.is_var or u.is_var:
            return False
        if t.skolem is not None and u.skolem is not None:
            key = ("c", t.op)
            if key in fw:
                return fw[key] == u.op
            if ("c", u.op) in bw:
                return False
            if t.sort != u.sort:
                return False
            fw[key] = u.op
            bw[("c", u.op)] = t.op
            return True
        if t.op != u.op or len(t.args) != len(u.args) \
                or (t.skolem is None) != (u.skolem is None):
            return False
        if sig.is_ac(t.op) or sig.is_c(t.op):
            return _match_args_any_order(list(t.args), list(u.args))
        return all(terms_eq(x, y) for x, y in zip(t.args, u.args))

    def _match_args_any_order(ts, us):
        if len(ts) != len(us):
            return False
        if not ts:
            return True
        t = ts[0]
        for i, u in enumerate(us):
            save_fw, save_bw = dict(fw), dict(bw)
            if terms_eq(t, u) and _match_args_any_order(
                    ts[1:], us[:i] + us[i + 1:]):
                return True
            fw.clear()
            fw.update(save_fw)
            bw.clear()
            bw.update(save_bw)
        return False

    def atoms_eq(x, y):
        (a1, b1), (a2, b2) = x.args, y.args
        save_fw, save_bw = dict(fw), dict(bw)
        if terms_eq(a1, a2) and terms_eq(b1, b2):
            return True
        fw.clear()
        fw.update(save_fw)
        bw.clear()
        bw.update(save_bw)
        return terms_eq(a1, b2) and terms_eq(b1, a2)

    def seq_eq(xs, ys, eq):
        if len(xs) != len(ys):
            return False
        if not xs:
            return True
        x = xs[0]
        for i, y in enumerate(ys):
            save_fw, save_bw = dict(fw), dict(bw)
            if eq(x, y) and seq_eq(xs[1:], ys[:i] + ys[i + 1:], eq):
                return True
            fw.clear()
            fw.update(save_fw)
            bw.clear()
            bw.update(save_bw)
        return False

    return seq_eq(list(a.premise), list(b.premise), atoms_eq) and \
        seq_eq(list(a.concl), list(b.concl),
               lambda d1, d2: seq_eq(list(d1), list(d2), atoms_eq))


# -- positions inside a multiclause


def mc_subterm_occurrences(mc, target):
    """All occurrences of `target` as a subterm of the multiclause, as
    (region, index, disjunct_index, side, path)."""
    occs = []

    def scan(t, mkocc, path=()):
        if t is target:
            occs.append(mkocc(path))
        if t.is_app:
            for i, a in enumerate(t.args):
                scan(a, mkocc, path + (i,))

    for i, a in enumerate(mc.premise):
        for side in (0, 1):
            scan(a.args[side],
                 lambda p, i=i, side=side: ("prem", i, 0, side, p))
    for l, d in enumerate(mc.concl):
        for k, a in enumerate(d):
            for side in (0, 1):
                scan(a.args[side],
                     lambda p, l=l, k=k, side=side: ("concl", k, l, side, p))
    return occs


def mc_replace(sig, mc, occ, new):
    region, i, l, side, path = occ
    from .rewrite import replace_at

    def patch_atom(atom):
        args = list(atom.args)
        args[side] = replace_at(sig, args[side], path, new)
        return sig.app(EQ, args)

    prem = list(mc.premise)
    concl = [list(d) for d in mc.concl]
    if region == "prem":
        prem[i] = patch_atom(prem[i])
    else:
        concl[l][i] = patch_atom(concl[l][i])
    return mk_multiclause(prem, concl)


def mc_subterm(mc, occ):
    from .rewrite import subterm_at
    region, i, l, side, path = occ
    atom = mc.premise[i] if region == "prem" else mc.concl[l][i]
    return subterm_at(atom.args[side], path)


# ---------------------------------------------------------------------------
# The degree operation and bar substitutions


def degree_map(sig, consts):
    """Fresh constants back to variables of the same name."""
    return {c.op: sig.var(c.op, c.sort) for c in consts}


def bar_results(tree, theory, alpha, xvars):
    """Split a unifier's range into fresh constants for the variables
    introduced around the goal's own constants."""
    yvars = []
    for xv in xvars:
        for v in sorted(apply_subst(theory.base.sig, alpha.get(xv, xv),
                                    {}).vars, key=lambda v: v.name):
            if v not in yvars:
                yvars.append(v)
    ymap = {}
    for y in yvars:
        origin = y.name.split("%")[0].split("#")[0] or "c"
        ymap[y] = tree.fresh_const(origin, y.sort)
    return ymap


def conv_term(sig, t, xmap, alpha, ymap):
    t = subst_skolems(sig, t, xmap)
    t = apply_subst(sig, t, alpha)
    if ymap:
        t = apply_subst(sig, t, ymap)
    return t


# ---------------------------------------------------------------------------
# Simplification rules


def rule_eps(tree: ProofTree, goal: Goal, params):
    thy = goal.theory
    eqth = thy.base.eqth
    if thy.hyps.inconsistent:
        return tree._attach(goal, "eps", params, [],
                            "hypotheses are contradictory")
    engine = eqth.engine(hyprules=thy.hyp_rules, prec=thy.prec)
    nfs = engine.normal_form_set(mc_term(eqth, goal.mc))
    if eqth.top in nfs:
        return tree._attach(goal, "eps", params, [], "reduced to truth")
    if eqth.bot in nfs:
        return tree._refute(goal, "eps", params, "reduced to falsehood")
    parsed = []
    for nf in sorted(nfs, key=lambda t: t.key):
        kind, mcs = eqth.term_mcs(nf)
        if kind == "goals":
            parsed.append(mcs)
    if not parsed:
        raise NotApplicable("no usable normal form")
    parsed.sort(key=lambda mcs: (len(mcs), _mcs_key(mcs)))
    best = parsed[0]
    if params.get("require_progress") and len(best) == 1 \
            and best[0] == goal.mc:
        raise NotApplicable("formula already simplified")
    return tree._attach(goal, "eps", params,
                        [(thy, m, {}) for m in best])


def _mcs_key(mcs):
    return tuple(
        (tuple(a.key for a in m.premise),
         tuple(tuple(a.key for a in d) for d in m.concl)) for m in mcs)


def rule_cvul(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    eqth = thy.base.eqth
    if thy.base.fvp is None:
        raise NotApplicable("theory has no finite-variant fragment")
    e1_atoms, rest = [], []
    for a in goal.mc.premise:
        if sig.is_sigma1_term(a.args[0]) and sig.is_sigma1_term(a.args[1]) \
                and _only_sigma1_consts(sig, a):
            e1_atoms.append(a)
        else:
            rest.append(a)
    if not e1_atoms:
        raise NotApplicable("premise has no variant-fragment equations")
    xconsts = sorted({c.op for a in e1_atoms for c in _consts_in(a)})
    xconsts = [thy.const_named(n) for n in xconsts]
    xmap = degree_map(sig, xconsts)
    pairs = [(subst_skolems(sig, a.args[0], xmap),
              subst_skolems(sig, a.args[1], xmap)) for a in e1_atoms]
    try:
        unifiers = variants.cvu_unify(sig, pairs, thy.base.fvp)
    except variants.DepthBoundExceeded as e:
        raise IncompleteUnifiers(str(e))
    results = []
    for alpha in unifiers:
        xvars = [xmap[c.op] for c in xconsts]
        ymap = bar_results(tree, thy, alpha, xvars)
        conv = lambda t: conv_term(sig, t, xmap, alpha, ymap)
        child_mc = mc_map(sig, Multiclause(tuple(rest), goal.mc.concl), conv)
        ground_eqs = []
        for c in xconsts:
            val = conv(c)
            if val is not c:
                ground_eqs.append(mk_clause([], [eqth.eq(c, val)],
                                            "assumption"))
        child_thy = thy.extend(list(ymap.values()), ground_eqs)
        results.append((child_thy, child_mc, {}))
    return tree._attach(goal, "cvul", params, results,
                        f"{len(unifiers)} constructor variant unifier(s)")


def _only_sigma1_consts(sig, atom):
    return True  # constants are treated as variables by the degree map


def _consts_in(atom):
    out = []

    def scan(t):
        if t.is_app:
            if t.skolem is not None:
                out.append(t)
            for a in t.args:
                scan(a)

    scan(atom.args[0])
    scan(atom.args[1])
    return out


def rule_cvufr(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    if thy.base.fvp is None:
        raise NotApplicable("theory has no finite-variant fragment")
    l = params.get("disjunction", None)
    k = params.get("atom", None)
    targets = []
    for dl, d in enumerate(goal.mc.concl):
        for ak, a in enumerate(d):
            if l is not None and (dl != l or ak != k):
                continue
            if sig.is_sigma1_term(a.args[0]) and sig.is_sigma1_term(a.args[1]):
                targets.append((dl, ak, a))
    if not targets:
        raise NotApplicable("no variant-fragment conclusion equation")
    for dl, ak, a in targets:
        xconsts = [thy.const_named(n)
                   for n in sorted({c.op for c in _consts_in(a)})]
        xmap = degree_map(sig, xconsts)
        pair = (subst_skolems(sig, a.args[0], xmap),
                subst_skolems(sig, a.args[1], xmap))
        try:
            unifiers = variants.cvu_unify(sig, [pair], thy.base.fvp)
        except variants.DepthBoundExceeded as e:
            raise IncompleteUnifiers(str(e))
        if unifiers:
            if l is not None:
                raise UnifierExists(
                    f"equation {a!r} has constructor variant unifiers")
            continue
        concl = [list(d) for d in goal.mc.concl]
        concl[dl].pop(ak)
        child = mk_multiclause(goal.mc.premise, concl)
        return tree._attach(goal, "cvufr", {"disjunction": dl, "atom": ak},
                            [(thy, child, {})])
    raise NotApplicable("every candidate equation has unifiers")


def rule_subl(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    eqth = thy.base.eqth
    mc = goal.mc
    sigma1_elsewhere = {
        i for i, a in enumerate(mc.premise)
        if sig.is_sigma1_term(a.args[0]) and sig.is_sigma1_term(a.args[1])}
    for i, a in enumerate(mc.premise):
        for side in (0, 1):
            x, u = a.args[side], a.args[1 - side]
            rest_sigma1 = sigma1_elsewhere - {i}
            if thy.base.fvp is not None and (
                    sig.is_sigma1_term(u) or rest_sigma1):
                continue
            prem_rest = mc.premise[:i] + mc.premise[i + 1:]
            if x.is_var:
                if x in u.vars:
                    continue
                if not sig.sorts.leq(u.sort, x.sort):
                    continue
                child = mc_subst(sig, Multiclause(prem_rest, mc.concl),
                                 {x: u})
                return tree._attach(goal, "subl", {"atom": i, "side": side},
                                    [(thy, child, {})])
            if x.is_app and x.skolem is not None \
                    and any(c is x for c in thy.consts):
                if any(c is x for c in _consts_in(a) if c is not x) \
                        or _occurs_const(u, x):
                    continue
                if not sig.sorts.leq(u.sort, x.sort):
                    continue
                yvars = sorted(u.vars, key=lambda v: v.name)
                ymap = {y: tree.fresh_const(y.name.split("%")[0], y.sort)
                        for y in yvars}
                ubar = apply_subst(sig, u, ymap)
                child = mc_unskolem(
                    sig, mc_subst(sig, Multiclause(prem_rest, mc.concl),
                                  ymap), {x.op: ubar})
                clause = mk_clause([], [eqth.eq(x, ubar)], "assumption")
                child_thy = thy.extend(list(ymap.values()), [clause])
                return tree._attach(goal, "subl", {"atom": i, "side": side},
                                    [(child_thy, child, {})])
    raise NotApplicable("no premise equation of substitution shape")


def _occurs_const(t, c):
    if t is c:
        return True
    if t.is_app:
        return any(_occurs_const(a, c) for a in t.args)
    return False


def rule_subr(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    eqth = thy.base.eqth
    mc = goal.mc
    if len(mc.concl) < 2:
        raise NotApplicable("conclusion must keep another conjunct")
    for l, d in enumerate(mc.concl):
        if len(d) != 1:
            continue
        a = d[0]
        for side in (0, 1):
            x, u = a.args[side], a.args[1 - side]
            rest_concl = mc.concl[:l] + mc.concl[l + 1:]
            if x.is_var and x not in u.vars \
                    and sig.sorts.leq(u.sort, x.sort):
                g1 = mk_multiclause(mc.premise, [[a]])
                g2 = mc_subst(sig, Multiclause(mc.premise, rest_concl),
                              {x: u})
                return tree._attach(goal, "subr", {"disjunction": l,
                                                   "side": side},
                                    [(thy, g1, {}), (thy, g2, {})])
            if x.is_app and x.skolem is not None \
                    and any(c is x for c in thy.consts) \
                    and not _occurs_const(u, x) \
                    and sig.sorts.leq(u.sort, x.sort):
                yvars = sorted(u.vars, key=lambda v: v.name)
                ymap = {y: tree.fresh_const(y.name.split("%")[0], y.sort)
                        for y in yvars}
                ubar = apply_subst(sig, u, ymap)
                g1 = mk_multiclause(mc.premise, [[a]])
                g2 = mc_unskolem(
                    sig, mc_subst(sig, Multiclause(mc.premise, rest_concl),
                                  ymap), {x.op: ubar})
                clause = mk_clause([], [eqth.eq(x, ubar)], "assumption")
                child_thy = thy.extend(list(ymap.values()), [clause])
                return tree._attach(goal, "subr", {"disjunction": l,
                                                   "side": side},
                                    [(thy, g1, {}), (child_thy, g2, {})])
    raise NotApplicable("no conclusion equation of substitution shape")


# -- narrowing rules


def _narrowing_setup(tree, goal, occ, allow_consts):
    thy = goal.theory
    sig = thy.base.sig
    t = mc_subterm(goal.mc, occ)
    if not t.is_app or t.skolem is not None:
        raise NotApplicable("focus must be an operator application")
    f = t.op
    if sig._has_ctor_decl(f, [a.sort for a in t.args]):
        raise NotApplicable(f"{f} is a constructor here")
    rules = thy.base.defined.get(f)
    if not rules:
        raise NotApplicable(f"{f} has no defining rules")
    if not all(sig.is_ctor_term(a, flex_consts=allow_consts)
               for a in t.args):
        raise NotApplicable("focus arguments must be constructor terms")
    if not thy.base.suff_complete.get(f, False):
        raise NotSufficientlyComplete(
            f"{f} failed the bounded sufficient-completeness check")
    consts = [c for c in thy.consts if _occurs_const(t, c)]
    if consts and not allow_consts:
        raise NotApplicable("focus contains fresh constants")
    return t, f, rules, consts


def _narrow_children(tree, goal, occ, t, rules, consts, with_hyps,
                     automated=False):
    thy = goal.theory
    sig = thy.base.sig
    eqth = thy.base.eqth
    xmap = degree_map(sig, consts)
    tdeg = subst_skolems(sig, t, xmap)
    results = []
    total_unifiers = 0
    ctr = itertools.count(1)
    for rule in rules:
        rrule, _ = rule.rename(sig, f"w{next(ctr)}")
        try:
            unifiers = unify.unify_b0(sig, [(tdeg, rrule.lhs)])
        except unify.UnifyError as e:
            raise IncompleteUnifiers(str(e))
        for alpha in unifiers:
            total_unifiers += 1
            hyp_clauses = []
            if with_hyps:
                hyp_clauses = _ssc_hypotheses(sig, goal, occ, t, rrule,
                                              alpha)
            nontrivial = _nontrivial_hyps(thy, hyp_clauses)
            ranvars = set()
            for v in list(tdeg.vars) + list(rrule.lhs.vars):
                ranvars |= apply_subst(sig, alpha.get(v, v), {}).vars
            if with_hyps:
                yset = sorted(ranvars, key=lambda v: v.name) \
                    if nontrivial else []
            else:
                xvars = [xmap[c.op] for c in consts]
                yset = []
                for xv in xvars:
                    for v in sorted(apply_subst(
                            sig, alpha.get(xv, xv), {}).vars,
                            key=lambda v: v.name):
                        if v not in yset:
                            yset.append(v)
            ymap = {y: tree.fresh_const(y.name.split("%")[0], y.sort)
                    for y in yset}
            conv = lambda u: conv_term(sig, u, xmap, alpha, ymap)
            replaced = mc_replace(sig, goal.mc, occ, rrule.rhs)
            extra_prem = [eqth.eq(conv(c.lhs), conv(c.rhs))
                          for c in rrule.conds if isinstance(c, EqCond)]
            child_mc = mc_map(sig, replaced, conv)
            child_mc = mk_multiclause(
                list(child_mc.premise) + extra_prem, child_mc.concl)
            new_clauses = []
            for c in consts:
                val = conv(c)
                if val is not c:
                    new_clauses.append(mk_clause([], [eqth.eq(c, val)],
                                                 "assumption"))
            for cl in hyp_clauses:
                new_clauses.append(
                    hyps.mk_clause([conv_atom(sig, a, ymap)
                                    for a in cl.premise],
                                   [conv_atom(sig, a, ymap)
                                    for a in cl.delta], "induction"))
            child_thy = thy.extend(list(ymap.values()), new_clauses)
            results.append((child_thy, child_mc, {}))
    return results, total_unifiers


def conv_atom(sig, atom, ymap):
    return sig.app(EQ, [apply_subst(sig, atom.args[0], ymap),
                        apply_subst(sig, atom.args[1], ymap)])


def _ssc_hypotheses(sig, goal, occ, t, rrule, alpha):
    region = occ[0]
    deltas = list(goal.mc.concl) if region == "prem" \
        else [goal.mc.concl[occ[2]]]
    out = []
    for call in ssc(sig, rrule):
        inst = apply_subst(sig, call, alpha)
        for gamma in unify.match_b0(sig, t, inst):
            for d in deltas:
                prem = [_atom_subst(sig, a, gamma) for a in goal.mc.premise]
                delta = [_atom_subst(sig, a, gamma) for a in d]
                out.append(mk_clause(prem, delta, "induction"))
            break
    return out


def _atom_subst(sig, atom, theta):
    return sig.app(EQ, [apply_subst(sig, atom.args[0], theta),
                        apply_subst(sig, atom.args[1], theta)])


def _nontrivial_hyps(thy, clauses):
    if not clauses:
        return False
    eqth = thy.base.eqth
    engine = eqth.engine(prec=thy.prec)
    for cl in clauses:
        nf = engine.normalize(
            eqth.mc_term(Multiclause(cl.premise, (cl.delta,))))
        if nf is not eqth.top:
            return True
    return False


def rule_ns(tree, goal, params):
    occ = params["occ"]
    automated = params.get("automated", False)
    t, f, rules, consts = _narrowing_setup(tree, goal, occ,
                                           allow_consts=True)
    sig = goal.theory.base.sig
    if automated:
        region = occ[0]
        atom = goal.mc.premise[occ[1]] if region == "prem" \
            else goal.mc.concl[occ[2]][occ[1]]
        other = atom.args[1 - occ[3]]
        if occ[4] != () or not sig.is_sigma1_term(other):
            raise NotApplicable(
                "automated narrowing needs a variant-fragment equation")
    results, n = _narrow_children(tree, goal, occ, t, rules, consts,
                                  with_hyps=False)
    return tree._attach(goal, "ns", params, results,
                        f"narrowed with {n} unifier(s)")


def rule_ni(tree, goal, params):
    occ = params["occ"]
    t, f, rules, consts = _narrowing_setup(tree, goal, occ,
                                           allow_consts=False)
    results, n = _narrow_children(tree, goal, occ, t, rules, consts,
                                  with_hyps=True)
    return tree._attach(goal, "ni", params, results,
                        f"narrowing induction with {n} case(s)")


# -- clause subsumption


def rule_cs(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    which = params.get("hypothesis")
    candidates = list(thy.hyps.clauses)
    if which is not None:
        candidates = [candidates[which]]
    for cl in candidates:
        if not cl.delta:
            continue
        for l, d in enumerate(goal.mc.concl):
            theta = _multiset_match(sig, list(cl.delta), list(d), {})
            if theta is None:
                continue
            theta = _multiset_match(sig, list(cl.premise),
                                    list(goal.mc.premise), theta)
            if theta is None:
                continue
            rest = [list(x) for j, x in enumerate(goal.mc.concl) if j != l]
            child = mk_multiclause(goal.mc.premise, rest)
            kids = [] if not rest else [(thy, child, {})]
            return tree._attach(goal, "cs",
                                {"hypothesis": thy.hyps.clauses.index(cl),
                                 "disjunction": l}, kids,
                                "subsumed by hypothesis")
    raise NoMatch("no hypothesis subsumes the goal")


def _multiset_match(sig, patterns, subjects, theta):
    """Match pattern atoms into a SUBSET of subject atoms."""
    if not patterns:
        return theta
    p = patterns[0]
    for i, s in enumerate(subjects):
        for th in unify._match(sig, p, s, theta):
            out = _multiset_match(sig, patterns[1:],
                                  subjects[:i] + subjects[i + 1:], th)
            if out is not None:
                return out
    return None


# -- equation rewriting with installed equivalences


def rule_er(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    side = params["side"]
    name = params["equivalence"]
    eqv = thy.base.equivalences.get(name)
    if eqv is None or not eqv.get("proved"):
        raise NotInstalled(f"equivalence {name} is not proved/installed")
    pat, repl = eqv["lhs"], eqv["rhs"]
    if side == "left":
        atoms = [("prem", i, 0, a) for i, a in enumerate(goal.mc.premise)]
    else:
        atoms = [("concl", k, l, a)
                 for l, d in enumerate(goal.mc.concl)
                 for k, a in enumerate(d)]
    for region, i, l, atom in atoms:
        for th in unify.match_b0(sig, pat, atom):
            new_atom = apply_subst(sig, repl, th)
            prem = list(goal.mc.premise)
            concl = [list(d) for d in goal.mc.concl]
            if region == "prem":
                prem[i] = new_atom
            else:
                concl[l][i] = new_atom
            child = mk_multiclause(prem, concl)
            rule = "erl" if side == "left" else "err"
            return tree._attach(goal, rule, params, [(thy, child, {})])
    raise NoMatch("no equation matches the installed equivalence")


# -- inductive congruence closure


def rule_icc(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    eqth = thy.base.eqth
    gvars = sorted(mc_vars(goal.mc), key=lambda v: v.name)
    skmap = {v: tree.fresh_const(v.name.split("%")[0], v.sort)
             for v in gvars}
    back = {c.op: v for v, c in skmap.items()}
    mcbar = mc_subst(sig, goal.mc, skmap)
    prec = thy.prec.extend(list(skmap.values()))
    if not mcbar.premise:
        params = dict(params)
        params["note"] = "empty premise; equivalent to eps"
    pairs = [tuple(a.args) for a in mcbar.premise]
    grs = groundcc.cc(sig, pairs, prec)
    sharp = groundcc.sharpen(sig, eqth, prec, thy.hyp_rules, grs)
    if sharp is None:
        return tree._attach(goal, "icc", params, [],
                            "premise is inductively unsatisfiable")
    results = []
    for dis in sharp:
        extra = tuple(Rule(f"ctx{i}", r.lhs, r.rhs)
                      for i, r in enumerate(dis.rules))
        engine = eqth.engine(hyprules=thy.hyp_rules, prec=prec,
                             extra_eqrules=extra)
        lam = eqth.conj([eqth.disj(list(d)) for d in mcbar.concl])
        nfs = engine.normal_form_set(lam)
        if eqth.top in nfs:
            continue
        choice = sorted(nfs, key=lambda t: t.key)[0]
        prem_term = eqth.conj(list(dis.atoms))
        kind, mcs = eqth.term_mcs(eqth.impl(prem_term, choice))
        if kind == "top":
            continue
        if kind == "bottom":
            # hand the refutation to eps, which owns falsified goals
            mcs = [mk_multiclause([], [[]])]
        for m in mcs:
            child = mc_unskolem(sig, m, back)
            results.append((thy, child, {}))
    uniq = []
    for r in results:
        if not any(r[1] == o[1] for o in uniq):
            uniq.append(r)
    return tree._attach(goal, "icc", params, uniq)


# -- variant satisfiability


def rule_varsat(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    if thy.base.fvp is None:
        raise NotApplicable("theory has no finite-variant fragment")
    atoms = list(goal.mc.premise) + [a for d in goal.mc.concl for a in d]
    for a in atoms:
        if not (sig.is_sigma1_term(a.args[0])
                and sig.is_sigma1_term(a.args[1])):
            raise NotApplicable("goal is not a variant-fragment formula")
    xmap = degree_map(sig, thy.consts)

    def deg(t):
        return subst_skolems(sig, t, xmap)

    premise = [(deg(a.args[0]), deg(a.args[1])) for a in goal.mc.premise]
    concl = [[(deg(a.args[0]), deg(a.args[1])) for a in d]
             for d in goal.mc.concl]
    verdict, _ = variants.var_sat_decide(sig, premise, concl, thy.base.fvp)
    if verdict == variants.VALID:
        return tree._attach(goal, "varsat", params, [],
                            "negation unsatisfiable in the variant model")
    raise NotApplicable(f"variant satisfiability returned {verdict}")


# ---------------------------------------------------------------------------
# Inductive rules


def rule_gsi(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    eqth = thy.base.eqth
    z = params["var"]
    gs = thy.base.gensets.get(params["genset"])
    if gs is None or not gs.verified_depth:
        raise UnverifiedGeneratorSet(
            f"generator set {params.get('genset')} is not verified")
    if z not in mc_vars(goal.mc):
        raise NotApplicable(f"{z!r} does not occur in the goal")
    if not sig.sorts.leq(z.sort, gs.sort) and not sig.sorts.leq(gs.sort,
                                                                z.sort):
        raise NotApplicable("generator set sort does not fit the variable")
    results = []
    ctr = itertools.count(1)
    for u in gs.patterns:
        ren = {v: sig.var(f"{v.name}%g{next(ctr)}", v.sort) for v in u.vars}
        ui = apply_subst(sig, u, ren)
        yvars = sorted(ui.vars, key=lambda v: v.name)
        ymap = {y: tree.fresh_const(y.name.split("%")[0], y.sort)
                for y in yvars}
        hyp_clauses = []
        for v in pst_b0(sig, ui, z.sort):
            vbar = apply_subst(sig, v, ymap)
            for d in goal.mc.concl:
                cl = mk_clause(
                    [_atom_subst(sig, a, {z: vbar})
                     for a in goal.mc.premise],
                    [_atom_subst(sig, a, {z: vbar}) for a in d],
                    "induction")
                hyp_clauses.append(cl)
        if hyp_clauses and _nontrivial_hyps(thy, hyp_clauses):
            ubar = apply_subst(sig, ui, ymap)
            child_mc = mc_subst(sig, goal.mc, {z: ubar})
            child_thy = thy.extend(list(ymap.values()), hyp_clauses)
        else:
            child_mc = mc_subst(sig, goal.mc, {z: ui})
            child_thy = thy
        results.append((child_thy, child_mc, {}))
    return tree._attach(goal, "gsi", params, results)


def rule_cas(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    eqth = thy.base.eqth
    gs = thy.base.gensets.get(params["genset"])
    if gs is None or not gs.verified_depth:
        raise UnverifiedGeneratorSet(
            f"generator set {params.get('genset')} is not verified")
    target = params["target"]
    ctr = itertools.count(1)
    results = []
    if target.is_var:
        if target not in mc_vars(goal.mc):
            raise NotApplicable("case variable does not occur in the goal")
        for u in gs.patterns:
            ren = {v: sig.var(f"{v.name}%c{next(ctr)}", v.sort)
                   for v in u.vars}
            ui = apply_subst(sig, u, ren)
            results.append((thy, mc_subst(sig, goal.mc, {target: ui}), {}))
        return tree._attach(goal, "cas", params, results)
    zbar = target
    if not any(c is zbar for c in thy.consts):
        raise NotApplicable("case constant is not part of the theory")
    for u in gs.patterns:
        ren = {v: sig.var(f"{v.name}%c{next(ctr)}", v.sort) for v in u.vars}
        ui = apply_subst(sig, u, ren)
        ymap = {y: tree.fresh_const(y.name.split("%")[0], y.sort)
                for y in sorted(ui.vars, key=lambda v: v.name)}
        ubar = apply_subst(sig, ui, ymap)
        clause = mk_clause([], [eqth.eq(zbar, ubar)], "assumption")
        child_thy = thy.extend(list(ymap.values()), [clause])
        child_mc = mc_unskolem(sig, goal.mc, {zbar.op: ubar})
        results.append((child_thy, child_mc, {}))
    return tree._attach(goal, "cas", params, results)


def rule_va(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    eqth = thy.base.eqth
    occ = params["occ"]
    region, i, l, side, path = occ
    if region != "prem":
        raise NotApplicable("abstraction targets a premise equation")
    w = mc_subterm(goal.mc, occ)
    if w.is_var:
        raise NotApplicable("cannot abstract a variable position")
    tree._const += 1
    z = sig.var(f"za{tree._const}", w.sort)
    replaced = mc_replace(sig, goal.mc, occ, z)
    prem = list(replaced.premise) + [eqth.eq(z, w)]
    child = mk_multiclause(prem, replaced.concl)
    return tree._attach(goal, "va", params, [(thy, child, {})])


def rule_cut(tree, goal, params):
    thy = goal.theory
    eqth = thy.base.eqth
    gamma = params["conjunction"]  # list of atom terms
    gvars = set()
    for a in gamma:
        gvars |= a.vars
    if not gvars <= mc_vars(goal.mc):
        raise VariableEscape("cut formula introduces new variables")
    g1 = mk_multiclause(goal.mc.premise, [[a] for a in gamma])
    g2 = mk_multiclause(list(goal.mc.premise) + list(gamma), goal.mc.concl)
    return tree._attach(goal, "cut", params, [(thy, g1, {}), (thy, g2, {})])


def rule_le(tree, goal, params):
    thy = goal.theory
    lemma_mc = params["lemma"]
    clauses = [mk_clause(lemma_mc.premise, d, "lemma")
               for d in lemma_mc.concl]
    lemma_thy = IndTheory(thy.base)
    enriched = thy.extend([], clauses)
    results = [(lemma_thy, lemma_mc, {}),
               (enriched, goal.mc, {})]
    return tree._attach(goal, "le", params, results,
                        "first child restates the lemma")


def rule_sp(tree, goal, params):
    thy = goal.theory
    disjuncts = params["cases"]  # list of lists of atoms
    theta = params.get("subst", {})
    scope = params.get("scope", "initial")
    sig = thy.base.sig
    inst = [[_atom_subst(sig, a, theta) for a in case]
            for case in disjuncts]
    used = set()
    for case in inst:
        for a in case:
            used |= a.vars
    if not used <= mc_vars(goal.mc):
        raise VariableEscape("split cases introduce new variables")
    results = []
    for case in inst:
        child = mk_multiclause(list(goal.mc.premise) + case, goal.mc.concl)
        results.append((thy, child, {}))
    # coverage: conjunctive normal form of the disjunction of cases
    choices = [[]]
    for case in inst:
        choices = [c + [a] for c in choices for a in case]
    coverage = mk_multiclause([], choices)
    cover_thy = thy if scope == "current" else IndTheory(thy.base)
    results.append((cover_thy, coverage, {}))
    return tree._attach(goal, "sp", params, results)


def rule_eq(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    occ = params["occ"]
    prem_pairs = params["condition"]   # [(t, t') ...]
    u, v = params["lhs"], params["rhs"]
    theta = params.get("subst", {})
    w = mc_subterm(goal.mc, occ)
    upat = apply_subst(sig, u, theta)
    gamma = None
    for th in unify.match_b0(sig, upat, w):
        gamma = th
        break
    if gamma is None:
        raise NoMatch(f"{w!r} does not match {upat!r}")
    full = dict(theta)
    full.update(gamma)
    engine = thy.base.eqth.term_engine(hyprules=thy.hyp_rules,
                                       prec=thy.prec)
    for (tl, tr) in prem_pairs:
        try:
            left = engine.normal_form_set(apply_subst(sig, tl, full))
            right = engine.normal_form_set(apply_subst(sig, tr, full))
        except BudgetExhausted as e:
            raise ConditionUnprovable(str(e))
        if not (left & right):
            raise ConditionUnprovable(
                f"condition {tl!r} = {tr!r} not joinable")
    child = mc_replace(sig, goal.mc, occ, apply_subst(sig, v, full))
    return tree._attach(goal, "eq", params, [(thy, child, {})])


def rule_exists(tree, goal, params):
    thy = goal.theory
    sig = thy.base.sig
    if not goal.skolem_sig:
        raise NotApplicable("goal has no existential signature")
    if thy.consts or thy.hyps.clauses:
        raise NotApplicable("existential witnesses apply to initial goals")
    interp = params["interpretation"]  # name -> (paramvars, term)
    missing = [s[0] for s in goal.skolem_sig if s[0] not in interp]
    if missing:
        raise IncompleteInterpretation(f"missing witnesses for {missing}")

    def translate(t):
        if t.is_var:
            return t
        if t.op in interp:
            pvars, body = interp[t.op]
            args = [translate(a) for a in t.args]
            return apply_subst(sig, body, dict(zip(pvars, args)))
        if not t.args:
            return t
        return sig.app(t.op, [translate(a) for a in t.args])

    child = mc_map(sig, goal.mc, translate)
    return tree._attach(goal, "exists", params,
                        [(thy, child, {"skolem_sig": ()})])


RULES = {
    "eps": rule_eps,
    "cvul": rule_cvul,
    "cvufr": rule_cvufr,
    "subl": rule_subl,
    "subr": rule_subr,
    "ns": rule_ns,
    "cs": rule_cs,
    "erl": lambda t, g, p: rule_er(t, g, dict(p, side="left")),
    "err": lambda t, g, p: rule_er(t, g, dict(p, side="right")),
    "icc": rule_icc,
    "varsat": rule_varsat,
    "gsi": rule_gsi,
    "ni": rule_ni,
    "exists": rule_exists,
    "le": rule_le,
    "sp": rule_sp,
    "cas": rule_cas,
    "va": rule_va,
    "eq": rule_eq,
    "cut": rule_cut,
}


# ---------------------------------------------------------------------------
# The automatic simplification loop


AUTO_ORDER = ("eps", "cvul", "cvufr", "subl", "subr", "cs", "icc", "varsat")


def auto(tree: ProofTree, rounds=100):
    applied = 0
    for _ in range(rounds):
        progress = False
        for g in list(tree.pending()):
            if tree.children.get(g.gid) or g.status != PENDING:
                continue
            for rule in AUTO_ORDER:
                if rule == "icc" and not g.mc.premise:
                    continue
                before = tree.version
                try:
                    kids = tree.apply(rule, g.gid,
                                      {"automated": True,
                                       "require_progress": True})
                except RuleError:
                    continue
                except (BudgetExhausted, groundcc.DnfCapExceeded):
                    tree.version = before
                    continue
                if _made_progress(tree, g, kids):
                    applied += 1
                    progress = True
                    break
                tree.undo()
            if progress:
                break
        if not progress:
            break
    return applied


def _made_progress(tree, parent, kids):
    if not kids:
        return True
    if len(kids) == 1 and kids[0].mc == parent.mc \
            and kids[0].theory is parent.theory:
        return False
    return True
