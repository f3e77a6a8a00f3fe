"""Equationally defined equality predicates: quantifier-free formulas
become terms of a fresh Boolean sort, and validity of ground formulas is
decided by normalization.

The extension adds, per connected component of sorts, a commutative
equality operator into the new Boolean sort, plus clash / decomposition /
reflexivity rules for free constructors and a small Boolean simplification
set.  Equality of ground constructor sides headed by an AC constructor is
decided natively on canonical forms.
"""

from __future__ import annotations

from dataclasses import dataclass

from .kernel import Signature
from .rewrite import Rule, RewriteTheory

NEWBOOL = "NewBool"
TOP = "#top"
BOT = "#bot"
AND = "#and"
OR = "#or"
NOT = "#not"
IMPL = "#impl"
EQ = "#eq"


class NonFreeConstructors(Exception):
    pass


class StuckFormula(Exception):
    pass


# ---------------------------------------------------------------------------
# Multiclauses


@dataclass(frozen=True)
class Multiclause:
    premise: tuple  # equality atoms (#eq terms)
    concl: tuple    # tuple of disjunctions, each a tuple of atoms

    def is_trivial(self):
        return not self.concl

    def __repr__(self):
        return f"Multiclause({self.premise!r} -> {self.concl!r})"


def mk_multiclause(premise, concl):
    prem = tuple(sorted(set(premise), key=lambda t: t.key))
    cc = []
    for delta in concl:
        cc.append(tuple(sorted(set(delta), key=lambda t: t.key)))
    cc = tuple(sorted(set(cc), key=lambda d: tuple(a.key for a in d)))
    return Multiclause(prem, cc)


class EqPredTheory:
    def __init__(self, sig: Signature, term_rules, budget=10000,
                 state_cap=512):
        self.sig = sig
        self.term_rules = list(term_rules)
        self.budget = budget
        self.state_cap = state_cap
        self.installed = []
        _extend_signature(sig)
        self.top = sig.app(TOP, [])
        self.bot = sig.app(BOT, [])
        self.eq_rules = _equality_rules(sig)
        self.bool_rules = _boolean_rules(sig)
        self._engines = {}

    # -- formula construction

    def eq(self, u, v):
        return self.sig.app(EQ, [u, v])

    def conj(self, parts):
        parts = [p for p in parts if p is not self.top]
        if any(p is self.bot for p in parts):
            return self.bot
        if not parts:
            return self.top
        if len(parts) == 1:
            return parts[0]
        return self.sig.app(AND, parts)

    def disj(self, parts):
        parts = [p for p in parts if p is not self.bot]
        if any(p is self.top for p in parts):
            return self.top
        if not parts:
            return self.bot
        if len(parts) == 1:
            return parts[0]
        return self.sig.app(OR, parts)

    def impl(self, p, c):
        if p is self.top:
            return c
        return self.sig.app(IMPL, [p, c])

    def mc_term(self, mc: Multiclause):
        prem = self.conj(list(mc.premise))
        concl = self.conj([self.disj(list(d)) for d in mc.concl])
        return self.impl(prem, concl)

    def term_mcs(self, t):
        """Parse a normal-form formula back into multiclauses.

        Returns ("top", []) / ("bottom", []) / ("goals", [Multiclause...]).
        """
        if t is self.top:
            return "top", []
        if t is self.bot:
            return "bottom", []
        mcs = []
        for part in self._and_parts(t):
            if part is self.top:
                continue
            if part is self.bot:
                return "bottom", []
            if part.is_app and part.op == IMPL:
                prem = self._atom_list(part.args[0])
                concl = self._concl_list(part.args[1])
            else:
                prem = []
                concl = self._concl_list(part)
            mcs.append(mk_multiclause(prem, concl))
        if not mcs:
            return "top", []
        return "goals", mcs

    def _and_parts(self, t):
        if t.is_app and t.op == AND:
            return list(t.args)
        return [t]

    def _atom_list(self, t):
        atoms = []
        for p in self._and_parts(t):
            if p is self.top:
                continue
            if not (p.is_app and p.op == EQ):
                raise StuckFormula(f"premise is not a conjunction of "
                                   f"equations: {p!r}")
            atoms.append(p)
        return atoms

    def _concl_list(self, t):
        if t is self.top:
            return []
        if t is self.bot:
            return [()]
        out = []
        for p in self._and_parts(t):
            if p is self.top:
                continue
            if p is self.bot:
                return [()]
            if p.is_app and p.op == OR:
                out.append(tuple(p.args))
            elif p.is_app and p.op == EQ:
                out.append((p,))
            else:
                raise StuckFormula(f"not a clause conclusion: {p!r}")
        return out

    # -- engines

    def install_rule(self, rule: Rule):
        self.installed.append(rule)
        self._engines.clear()

    def all_eq_rules(self, extra=()):
        return (self.term_rules + self.eq_rules + self.bool_rules
                + self.installed + list(extra))

    def engine(self, hyprules=(), prec=None, extra_eqrules=(), budget=None,
               state_cap=None):
        key = (tuple(hyprules), id(prec), tuple(extra_eqrules))
        eng = self._engines.get(key)
        if eng is None:
            eng = RewriteTheory(
                self.sig, self.all_eq_rules(extra_eqrules), hyprules,
                prec=prec, budget=budget or self.budget,
                natives=[_native_ground_eq, _native_impl],
                state_cap=state_cap or self.state_cap)
            eng.top_term = self.top
            eng.bot_term = self.bot
            if len(self._engines) < 64:
                self._engines[key] = eng
        return eng

    def term_engine(self, hyprules=(), prec=None):
        """Engine over the plain term rules only (no equality predicates)."""
        eng = RewriteTheory(self.sig, self.term_rules, hyprules, prec=prec,
                            budget=self.budget, state_cap=self.state_cap)
        eng.top_term = self.top
        return eng

    # -- ground evaluation

    def ground_eval(self, phi):
        if not phi.ground:
            raise ValueError("ground_eval needs a ground formula")
        nf = self.engine().normalize(phi)
        if nf is self.top:
            return True
        if nf is self.bot:
            return False
        raise StuckFormula(f"formula stuck at {nf!r}")


def build_eqpred_theory(sig, term_rules, budget=10000, state_cap=512):
    for r in term_rules:
        if r.lhs.is_app and sig.is_ctor_term(r.lhs):
            raise NonFreeConstructors(
                f"rule {r.label} rewrites constructor terms: {r.lhs!r}")
    return EqPredTheory(sig, term_rules, budget, state_cap)


# ---------------------------------------------------------------------------
# Signature extension


def _extend_signature(sig: Signature):
    if sig.has_op(TOP):
        return
    frozen = sig.frozen
    sig.frozen = False
    sig.sorts.add_sort(NEWBOOL)
    sig.declare_op(TOP, [], NEWBOOL, ctor=True, prec=-2)
    sig.declare_op(BOT, [], NEWBOOL, ctor=True, prec=-1)
    base = 10 ** 6
    sig.declare_op(EQ, [NEWBOOL, NEWBOOL], NEWBOOL, axioms="C",
                   prec=base)  # placeholder decl keeps #eq commutative
    comps = sig.sorts.components()
    for cname, members in sorted(comps.items()):
        if NEWBOOL in members:
            continue
        top = _top_sort(sig, members)
        sig.declare_op(EQ, [top, top], NEWBOOL)
    sig.declare_op(NOT, [NEWBOOL], NEWBOOL, prec=base + 1)
    sig.declare_op(AND, [NEWBOOL, NEWBOOL], NEWBOOL, axioms="AC",
                   prec=base + 2)
    sig.declare_op(OR, [NEWBOOL, NEWBOOL], NEWBOOL, axioms="AC",
                   prec=base + 3)
    sig.declare_op(IMPL, [NEWBOOL, NEWBOOL], NEWBOOL, prec=base + 4)
    sig.sorts._rebuild()
    sig.frozen = frozen


def _top_sort(sig, members):
    tops = [s for s in members
            if all(sig.sorts.leq(t, s) for t in members)]
    if not tops:
        raise NonFreeConstructors(
            f"component {sorted(members)} has no top sort; kind-complete "
            f"the signature first")
    return tops[0]


# ---------------------------------------------------------------------------
# Generated rules


def _equality_rules(sig):
    rules = []
    top = sig.app(TOP, [])
    bot = sig.app(BOT, [])
    comps = sig.sorts.components()
    for cname, members in sorted(comps.items()):
        if NEWBOOL in members:
            continue
        ts = _top_sort(sig, members)
        x = sig.var("%rx", ts)
        rules.append(Rule(f"eq-refl-{cname}", sig.app(EQ, [x, x]), top))
    ctor_decls = []
    for name in sorted(sig.ops()):
        for d in sig.decls(name):
            if d.ctor and not d.kinded:
                ctor_decls.append(d)
    for d in ctor_decls:
        comp = sig.sorts.component(d.result)
        xs = [sig.var(f"%a{i}", s) for i, s in enumerate(d.args)]
        ys = [sig.var(f"%b{i}", s) for i, s in enumerate(d.args)]
        lhs_t = sig.app(d.name, xs)
        # clash with every other constructor of the component
        for e in ctor_decls:
            if e.name == d.name or sig.sorts.component(e.result) != comp:
                continue
            zs = [sig.var(f"%c{i}", s) for i, s in enumerate(e.args)]
            rules.append(Rule(f"eq-clash-{d.name}-{e.name}",
                              sig.app(EQ, [lhs_t, sig.app(e.name, zs)]),
                              bot))
        if not d.args:
            continue
        ax = sig.axioms.get(d.name, "")
        rhs_t = sig.app(d.name, ys)
        if ax == "":
            body = [sig.app(EQ, [a, b]) for a, b in zip(xs, ys)]
            rules.append(Rule(f"eq-dec-{d.name}",
                              sig.app(EQ, [lhs_t, rhs_t]),
                              _conj(sig, body)))
        elif ax == "C":
            straight = _conj(sig, [sig.app(EQ, [xs[0], ys[0]]),
                                   sig.app(EQ, [xs[1], ys[1]])])
            crossed = _conj(sig, [sig.app(EQ, [xs[0], ys[1]]),
                                  sig.app(EQ, [xs[1], ys[0]])])
            rules.append(Rule(f"eq-dec-{d.name}",
                              sig.app(EQ, [lhs_t, rhs_t]),
                              sig.app(OR, [straight, crossed])))
        # AC constructors: ground sides are decided natively; non-ground
        # equations between them stay as atoms (occurs-style rules would
        # match argument sub-multisets and do too much)
        if ax != "AC":
            for i, s in enumerate(d.args):
                if sig.sorts.component(s) == comp:
                    rules.append(Rule(f"eq-occ-{d.name}-{i}",
                                      sig.app(EQ, [lhs_t, xs[i]]), bot))
    dedup = {}
    for r in rules:
        dedup[(r.lhs, r.rhs)] = r
    return list(dedup.values())


def _conj(sig, parts):
    if not parts:
        return sig.app(TOP, [])
    if len(parts) == 1:
        return parts[0]
    return sig.app(AND, parts)


def _boolean_rules(sig):
    top = sig.app(TOP, [])
    bot = sig.app(BOT, [])
    b = sig.var("%B", NEWBOOL)
    rules = [
        Rule("and-top", sig.app(AND, [b, top]), b),
        Rule("and-bot", sig.app(AND, [b, bot]), bot),
        Rule("and-idem", sig.app(AND, [b, b]), b),
        Rule("or-bot", sig.app(OR, [b, bot]), b),
        Rule("or-top", sig.app(OR, [b, top]), top),
        Rule("or-idem", sig.app(OR, [b, b]), b),
        Rule("not-top", sig.app(NOT, [top]), bot),
        Rule("not-bot", sig.app(NOT, [bot]), top),
        Rule("not-not", sig.app(NOT, [sig.app(NOT, [b])]), b),
        Rule("impl-self", sig.app(IMPL, [b, b]), top),
    ]
    return rules


# ---------------------------------------------------------------------------
# Native simplification hooks


def _native_ground_eq(sig, t, engine):
    if not (t.is_app and t.op == EQ):
        return None
    a, b_ = t.args
    if a.ground and b_.ground and sig.is_ctor_term(a) and sig.is_ctor_term(b_):
        return engine.top_term if a is b_ else engine.bot_term
    return None


def _native_impl(sig, t, engine):
    if not (t.is_app and t.op == IMPL):
        return None
    p, c = t.args
    top, bot = engine.top_term, engine.bot_term
    if p is bot:
        return top
    if p is top:
        return c
    if c is top:
        return top
    # distribute a disjunctive premise over the implication
    parts = [p] if not (p.is_app and p.op == AND) else list(p.args)
    for i, part in enumerate(parts):
        if part.is_app and part.op == OR:
            rest = parts[:i] + parts[i + 1:]
            branches = []
            for alt in part.args:
                prem = rest + [alt]
                pe = prem[0] if len(prem) == 1 else sig.app(AND, prem)
                branches.append(sig.app(IMPL, [pe, c]))
            return branches[0] if len(branches) == 1 \
                else sig.app(AND, branches)
    return None
