"""Rewriting modulo the structural axioms.

Equational rules are applied eagerly to a unique normal form; hypothesis
rules are non-confluent and explored by an all-normal-forms breadth-first
search.  Identity attributes are compiled away up front: each identity
axiom becomes a rule and every equational left side is replaced by its
finite set of variants against those rules.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import rpo, unify
from .kernel import apply_subst, compose


class BudgetExhausted(Exception):
    pass


class CollapseViolation(Exception):
    pass


# ---------------------------------------------------------------------------
# Conditions


@dataclass(frozen=True)
class EqCond:
    lhs: object
    rhs: object


@dataclass(frozen=True)
class MatchCond:
    var: object
    rhs: object


@dataclass(frozen=True)
class OrderCond:
    big: object
    small: object


@dataclass(frozen=True)
class RewriteCond:
    formula: object  # a NewBool term; satisfied when TOP is reachable


@dataclass(frozen=True)
class Rule:
    label: str
    lhs: object
    rhs: object
    conds: tuple = ()
    kind: str = "eq"  # "eq" (equational, eager) | "hyp" (searched)

    def rename(self, sig, suffix):
        ren = {v: sig.var(f"{v.name}%{suffix}", v.sort) for v in self.vars()}

        def sub(t):
            return apply_subst(sig, t, ren)

        conds = []
        for c in self.conds:
            if isinstance(c, EqCond):
                conds.append(EqCond(sub(c.lhs), sub(c.rhs)))
            elif isinstance(c, MatchCond):
                conds.append(MatchCond(ren.get(c.var, c.var), sub(c.rhs)))
            elif isinstance(c, OrderCond):
                conds.append(OrderCond(sub(c.big), ren.get(c.small, c.small)))
            else:
                conds.append(RewriteCond(sub(c.formula)))
        return Rule(self.label, sub(self.lhs), sub(self.rhs), tuple(conds),
                    self.kind), ren

    def vars(self):
        vs = set(self.lhs.vars) | set(self.rhs.vars)
        for c in self.conds:
            if isinstance(c, EqCond):
                vs |= c.lhs.vars | c.rhs.vars
            elif isinstance(c, MatchCond):
                vs.add(c.var)
                vs |= c.rhs.vars
            elif isinstance(c, OrderCond):
                vs |= c.big.vars
                vs.add(c.small)
            else:
                vs |= c.formula.vars
        return vs


# ---------------------------------------------------------------------------
# Rewrite theory


class RewriteTheory:
    """Equational rules plus (optional) hypothesis rules over one signature.

    `natives` are built-in simplification hooks (term -> term | None) tried
    like equational rules; the equality-predicate layer uses them for the
    few variadic Boolean steps that have no finite rule pattern.
    """

    def __init__(self, sig, eqrules, hyprules=(), prec=None, budget=10000,
                 natives=(), state_cap=512):
        self.sig = sig
        self.eqrules = list(eqrules)
        self.hyprules = list(hyprules)
        self.prec = prec or rpo.PrecedenceTable(sig)
        self.budget = budget
        self.natives = list(natives)
        self.state_cap = state_cap
        self._by_head = {}
        for r in self.eqrules:
            self._by_head.setdefault(r.lhs.op, []).append(r)
        self._memo = {}
        self._steps = 0
        self._rename_ctr = itertools.count(1)

    def with_hyps(self, hyprules):
        th = RewriteTheory(self.sig, self.eqrules, hyprules, self.prec,
                           self.budget, self.natives, self.state_cap)
        th._memo = self._memo  # equational part is shared
        return th

    # -- eager equational normalization

    def normalize(self, t):
        self._steps = 0
        return self._norm(t)

    def _norm(self, t):
        if t.is_var:
            return t
        hit = self._memo.get(t)
        if hit is not None:
            return hit
        cur = t
        while True:
            if cur.is_var:
                break
            if cur.args:
                args = [self._norm(a) for a in cur.args]
                nxt = self.sig.app(cur.op, args)
                if nxt is not cur:
                    cur = nxt
                    continue
            red = self._root_step(cur)
            if red is None:
                break
            self._bump()
            cur = red
        self._memo[t] = cur
        if cur is not t:
            self._memo[cur] = cur
        return cur

    def _bump(self):
        self._steps += 1
        if self._steps > self.budget:
            raise BudgetExhausted(
                f"rewrite budget of {self.budget} steps exhausted")

    def _root_step(self, t):
        for native in self.natives:
            r = native(self.sig, t, self)
            if r is not None and r is not t:
                return r
        for rule in self._by_head.get(t.op, []):
            r = self._apply_rule_at_root(rule, t, eager=True)
            if r is not None:
                return r
        return None

    def _apply_rule_at_root(self, rule, t, eager):
        sig = self.sig
        rule, _ = rule.rename(sig, next(self._rename_ctr))
        ax = sig.axioms.get(t.op, "")
        if ax == "AC" and t.is_app and rule.lhs.is_app \
                and len(t.args) > len(rule.lhs.args):
            for th, rem in unify.match_ac_extension(
                    sig, t.op, rule.lhs.args, t.args):
                th = self._check_conds(rule, th)
                if th is not None:
                    rhs = apply_subst(sig, rule.rhs, th)
                    return sig.app(t.op, [rhs] + list(rem))
            return None
        for th in unify.match_b0(sig, rule.lhs, t):
            th = self._check_conds(rule, th)
            if th is not None:
                return apply_subst(sig, rule.rhs, th)
        return None

    def _check_conds(self, rule, theta):
        sig = self.sig
        for c in rule.conds:
            if isinstance(c, MatchCond):
                val = self._norm(apply_subst(sig, c.rhs, theta))
                prev = theta.get(c.var)
                if prev is not None and prev is not val:
                    return None
                theta = dict(theta)
                theta[c.var] = val
            elif isinstance(c, OrderCond):
                big = self._norm_shallow(apply_subst(sig, c.big, theta))
                small = theta.get(c.small, c.small)
                if rpo.rpo_compare(big, small, self.prec) != rpo.GREATER:
                    return None
            elif isinstance(c, EqCond):
                l = self._norm(apply_subst(sig, c.lhs, theta))
                r = self._norm(apply_subst(sig, c.rhs, theta))
                if l is not r:
                    return None
            elif isinstance(c, RewriteCond):
                phi = apply_subst(sig, c.formula, theta)
                if not self._rewrite_cond_holds(phi):
                    return None
        return theta

    def _norm_shallow(self, t):
        return t

    def _rewrite_cond_holds(self, phi):
        top = getattr(self, "top_term", None)
        try:
            nfs = self.normal_form_set(phi, _inner=True)
        except BudgetExhausted:
            raise
        return top is not None and top in nfs

    # -- all-normal-forms search with hypothesis rules

    def normal_form_set(self, t, _inner=False):
        if not _inner:
            self._steps = 0
        start = self._norm(t)
        if not self.hyprules:
            return {start}
        seen = {start}
        frontier = [start]
        out = set()
        while frontier:
            cur = frontier.pop(0)
            succs = []
            for nxt in self._hyp_steps(cur):
                nf = self._norm(nxt)
                succs.append(nf)
            new = False
            for nf in succs:
                if nf not in seen:
                    seen.add(nf)
                    if len(seen) > self.state_cap:
                        raise BudgetExhausted(
                            f"normal-form search exceeded {self.state_cap} "
                            f"states")
                    frontier.append(nf)
            if not succs:
                out.add(cur)
        return out

    def _hyp_steps(self, t):
        """One hypothesis-rule step anywhere in t (deduplicated)."""
        results = []
        seen = set()
        for pos, sub in _positions(t):
            for rule in self.hyprules:
                if not sub.is_app or rule.lhs.is_var:
                    continue
                if rule.lhs.op != sub.op:
                    continue
                for red in self._rule_redexes(rule, sub):
                    new = _replace(self.sig, t, pos, red)
                    if new not in seen and new is not t:
                        seen.add(new)
                        results.append(new)
                        self._bump()
        return results

    def _rule_redexes(self, rule, sub):
        sig = self.sig
        rrule, _ = rule.rename(sig, next(self._rename_ctr))
        ax = sig.axioms.get(sub.op, "")
        outs = []
        if ax == "AC" and rrule.lhs.is_app \
                and len(sub.args) > len(rrule.lhs.args):
            for th, rem in unify.match_ac_extension(
                    sig, sub.op, rrule.lhs.args, sub.args):
                th2 = self._check_conds(rrule, th)
                if th2 is not None:
                    rhs = apply_subst(sig, rrule.rhs, th2)
                    outs.append(sig.app(sub.op, [rhs] + list(rem)))
        for th in unify.match_b0(sig, rrule.lhs, sub):
            th2 = self._check_conds(rrule, th)
            if th2 is not None:
                outs.append(apply_subst(sig, rrule.rhs, th2))
        return outs


def _positions(t, prefix=()):
    yield prefix, t
    if t.is_app:
        for i, a in enumerate(t.args):
            yield from _positions(a, prefix + (i,))


def _replace(sig, t, pos, new):
    if not pos:
        return new
    i = pos[0]
    args = list(t.args)
    args[i] = _replace(sig, args[i], pos[1:], new)
    return sig.app(t.op, args)


def subterm_at(t, pos):
    for i in pos:
        t = t.args[i]
    return t


replace_at = _replace


# ---------------------------------------------------------------------------
# Identity-axiom compilation


def identity_rules(sig):
    rules = []
    for op, ident in sorted(sig.identity.items()):
        e = sig.app(ident, [])
        bound = unify._max_arg_sort(sig, op)
        x = sig.var(f"%id_{op}", bound)
        rules.append(Rule(f"id-{op}", sig.app(op, [x, e]), x))
        if not sig.is_ac(op) and not sig.is_c(op):
            rules.append(Rule(f"id-{op}-l", sig.app(op, [e, x]), x))
    return rules


def u_transform(sig, rules, variant_depth=32):
    """Replace each rule's left side by its variants against the identity
    rules; the identity rules themselves join the equational rule set."""
    urules = identity_rules(sig)
    if not urules:
        return list(rules), []
    from . import variants as variants_mod
    sub = variants_mod.FvpSubtheory(sig, urules, depth=variant_depth)
    out = []
    for r in rules:
        vs = variants_mod.compute_variants(sig, r.lhs, sub)
        for i, (lv, alpha) in enumerate(sorted(vs, key=lambda v: v[0].key)):
            if lv.is_var or lv.op != r.lhs.op:
                raise CollapseViolation(
                    f"rule {r.label}: variant {lv!r} lost its top symbol")
            rhs = apply_subst(sig, r.rhs, alpha)
            conds = _subst_conds(sig, r.conds, alpha)
            label = r.label if i == 0 else f"{r.label}.u{i}"
            out.append(Rule(label, lv, rhs, conds, r.kind))
    return out, urules


def _subst_conds(sig, conds, alpha):
    out = []
    for c in conds:
        if isinstance(c, EqCond):
            out.append(EqCond(apply_subst(sig, c.lhs, alpha),
                              apply_subst(sig, c.rhs, alpha)))
        elif isinstance(c, MatchCond):
            out.append(MatchCond(c.var, apply_subst(sig, c.rhs, alpha)))
        elif isinstance(c, OrderCond):
            out.append(OrderCond(apply_subst(sig, c.big, alpha), c.small))
        else:
            out.append(RewriteCond(apply_subst(sig, c.formula, alpha)))
    return tuple(out)


# ---------------------------------------------------------------------------
# Sort-decreasingness (sampled over sort-minimal instantiations)


def check_sort_decreasing(sig, rule, cap=512):
    lvars = sorted(rule.lhs.vars, key=lambda v: v.name)
    options = []
    for v in lvars:
        opts = [v] + [sig.var(f"{v.name}@{s}", s)
                      for s in sig.sorts.lower_sorts(v.sort) if s != v.sort]
        options.append(opts[:6])
    count = 0
    for combo in itertools.product(*options):
        count += 1
        if count > cap:
            break
        th = {v: w for v, w in zip(lvars, combo) if v is not w}
        try:
            l = apply_subst(sig, rule.lhs, th)
            r = apply_subst(sig, rule.rhs, th)
        except Exception:
            continue
        if not sig.sorts.leq(r.sort, l.sort):
            return th
    return None
