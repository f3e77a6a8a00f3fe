"""Ground congruence closure modulo the structural axioms, by completion
with the term order, plus the inter-reduction ("sharpening") step that
feeds the inductive congruence closure rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import rpo
from .eqpred import EQ
from .rewrite import BudgetExhausted, Rule, RewriteTheory

CONVERGENT = "convergent"
BOUNDED = "bounded"


class DnfCapExceeded(Exception):
    pass


@dataclass
class GroundRuleSet:
    rules: list
    status: str

    def engine(self, sig):
        return RewriteTheory(sig, self.rules)


def cc(sig, eqs, prec, bound=200):
    """Complete ground equations into a terminating (usually convergent)
    rewrite system oriented by the term order."""
    queue = [(l, r) for (l, r) in eqs]
    rules = []
    rounds = 0
    label = itertools.count(1)
    while queue:
        rounds += 1
        if rounds > bound:
            return GroundRuleSet(rules, BOUNDED)
        l, r = queue.pop(0)
        eng = RewriteTheory(sig, rules)
        l = eng.normalize(l)
        r = eng.normalize(r)
        if l is r:
            continue
        c = rpo.rpo_compare(l, r, prec)
        if c == rpo.LESS:
            l, r = r, l
        elif c == rpo.EQUAL:
            continue
        elif c == rpo.INCOMPARABLE:
            raise ValueError(f"ground order not total on {l!r} vs {r!r}")
        new = Rule(f"cc{next(label)}", l, r)
        # retire rules the new one can reduce, requeue them as equations
        keep = []
        probe = RewriteTheory(sig, [new])
        for old in rules:
            if probe.normalize(old.lhs) is not old.lhs \
                    or probe.normalize(old.rhs) is not old.rhs:
                queue.append((old.lhs, old.rhs))
            else:
                keep.append(old)
        rules = keep + [new]
        # AC overlap deduction at shared heads
        for old in rules:
            if old is new:
                continue
            queue.extend(_ac_criticals(sig, new, old))
            queue.extend(_ac_criticals(sig, old, new))
    status = CONVERGENT if _locally_confluent(sig, rules) else BOUNDED
    return GroundRuleSet(rules, status)


def _ac_criticals(sig, r1, r2):
    l1, l2 = r1.lhs, r2.lhs
    if not (l1.is_app and l2.is_app and l1.op == l2.op
            and sig.is_ac(l1.op)):
        return []
    f = l1.op
    a1 = list(l1.args)
    a2 = list(l2.args)
    inter = []
    rest2 = list(a2)
    for x in a1:
        for y in rest2:
            if x is y:
                inter.append(x)
                rest2.remove(y)
                break
    if not inter or not rest2:
        return []
    rest1 = list(a1)
    for x in inter:
        rest1.remove(x)
    if not rest1:
        return []
    # peak f(a1 ++ rest2) rewritten by each rule
    via1 = sig.app(f, [r1.rhs] + rest2)
    via2 = sig.app(f, [r2.rhs] + rest1)
    return [(via1, via2)]


def _locally_confluent(sig, rules):
    eng = RewriteTheory(sig, rules)
    for r1 in rules:
        for r2 in rules:
            for l, r in _ac_criticals(sig, r1, r2):
                if eng.normalize(l) is not eng.normalize(r):
                    return False
    return True


def decide_ground_eq(sig, t, u, grs: GroundRuleSet):
    eng = grs.engine(sig)
    return eng.normalize(t) is eng.normalize(u)


# ---------------------------------------------------------------------------
# Sharpening


@dataclass
class SharpDisjunct:
    atoms: tuple   # ground equality atoms
    rules: tuple   # the same equalities oriented by the term order


def sharpen(sig, eqth, prec, hyprules, grs: GroundRuleSet, dnf_cap=64):
    """Inter-reduce the closure rules with the equality-predicate layer and
    the hypothesis rules; returns None for an unsatisfiable context or the
    per-disjunct oriented rule sets."""
    conjuncts = []
    for i, r in enumerate(grs.rules):
        others = [Rule(f"ccx{j}", o.lhs, o.rhs)
                  for j, o in enumerate(grs.rules) if o is not r]
        eng = eqth.engine(hyprules=tuple(hyprules), prec=prec,
                          extra_eqrules=tuple(others))
        atom = sig.app(EQ, [r.lhs, r.rhs])
        nfs = eng.normal_form_set(atom)
        if eqth.bot in nfs:
            return None
        choice = sorted(nfs, key=lambda t: t.key)[0]
        if choice is eqth.top:
            continue
        conjuncts.append(choice)
    disjuncts = [[]]
    for c in conjuncts:
        alts = _dnf(sig, eqth, c)
        nxt = []
        for d in disjuncts:
            for a in alts:
                nxt.append(d + a)
                if len(nxt) > dnf_cap:
                    raise DnfCapExceeded(
                        f"sharpening produced more than {dnf_cap} disjuncts")
        disjuncts = nxt
    if not disjuncts:
        return None
    out = []
    for d in disjuncts:
        atoms = tuple(dict.fromkeys(d))
        rs = []
        drop = False
        for a in atoms:
            l, r = a.args
            c = rpo.rpo_compare(l, r, prec)
            if c == rpo.LESS:
                l, r = r, l
            elif c == rpo.EQUAL:
                continue
            elif c == rpo.INCOMPARABLE:
                drop = True
                break
            rs.append(Rule(f"sharp{len(rs)}", l, r))
        if not drop:
            out.append(SharpDisjunct(atoms, tuple(rs)))
    return out


def _dnf(sig, eqth, t):
    if t is eqth.top:
        return [[]]
    if t is eqth.bot:
        return []
    if t.is_app and t.op == "#and":
        prod = [[]]
        for a in t.args:
            prod = [d + alt for d in prod for alt in _dnf(sig, eqth, a)]
        return prod
    if t.is_app and t.op == "#or":
        out = []
        for a in t.args:
            out.extend(_dnf(sig, eqth, a))
        return out
    if t.is_app and t.op == EQ:
        return [[t]]
    raise BudgetExhausted(f"cannot put {t!r} in disjunctive normal form")
