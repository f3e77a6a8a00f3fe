"""Hypothesis clauses: taxonomy-driven partition, compilation into
background-aware rewrite rules, and the simplification pass that keeps
every inductive theory's hypothesis set in simplified form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import groundcc, rpo
from .eqpred import EQ, EqPredTheory, Multiclause
from .rewrite import (EqCond, MatchCond, OrderCond, RewriteCond, Rule,
                      RewriteTheory)


@dataclass(frozen=True)
class Clause:
    premise: tuple  # equality atoms
    delta: tuple    # disjunction of equality atoms
    provenance: str = "hypothesis"

    def vars(self):
        vs = set()
        for a in self.premise + self.delta:
            vs |= a.vars
        return vs

    def is_ground(self):
        return all(a.ground for a in self.premise + self.delta)

    def key(self):
        return (tuple(a.key for a in self.premise),
                tuple(a.key for a in self.delta))


def mk_clause(premise, delta, provenance="hypothesis"):
    prem = tuple(sorted(set(premise), key=lambda t: t.key))
    dl = tuple(sorted(set(delta), key=lambda t: t.key))
    return Clause(prem, dl, provenance)


def clause_of_pairs(eqth, prem_pairs, delta_pairs, provenance="hypothesis"):
    return mk_clause([eqth.eq(u, v) for u, v in prem_pairs],
                     [eqth.eq(u, v) for u, v in delta_pairs], provenance)


@dataclass
class HypothesisSet:
    clauses: tuple = ()
    executable: tuple = ()   # (clause, Classified)
    vee: tuple = ()
    nonexec: tuple = ()
    ground: tuple = ()
    inconsistent: bool = False

    def all_clauses(self):
        return self.clauses

    def taxonomy(self, clause):
        if any(c is clause for c in self.ground):
            return "ground"
        if any(c is clause for c, _ in self.executable):
            return "executable"
        if any(c is clause for c in self.vee):
            return "vee-executable"
        return "non-executable"


def classify_and_partition(eqth: EqPredTheory, clauses, prec) -> HypothesisSet:
    sig = eqth.sig
    execu, vee, nonexec, ground = [], [], [], []
    seen = set()
    uniq = []
    for cl in clauses:
        if cl.key() in seen:
            continue
        seen.add(cl.key())
        uniq.append(cl)
    for cl in uniq:
        if not cl.delta:
            nonexec.append(cl)  # premise refutes; kept only for display
            continue
        if len(cl.delta) == 1:
            atom = cl.delta[0]
            l, r = atom.args
            if l is r:
                continue
            pairs = [tuple(a.args) for a in cl.premise]
            info = rpo.classify_equation(pairs, l, r, prec)
            if info.kind == "unusable":
                nonexec.append(cl)
            else:
                execu.append((cl, info))
                if not cl.premise and atom.ground:
                    ground.append(cl)
            continue
        dvars = set()
        for a in cl.delta:
            dvars |= a.vars
        pvars = set()
        for a in cl.premise:
            pvars |= a.vars
        if pvars <= dvars:
            vee.append(cl)
        else:
            nonexec.append(cl)
    return HypothesisSet(tuple(uniq), tuple(execu), tuple(vee),
                         tuple(nonexec), tuple(ground))


# ---------------------------------------------------------------------------
# Compilation to rewrite rules


def compile_rules(eqth: EqPredTheory, hset: HypothesisSet, prec):
    """Background-aware hypothesis rules: reductive rules keep their
    conditions as searched rewrite conditions, usable equations become
    order-constrained rules, non-Horn clauses rewrite their disjunction
    to truth."""
    sig = eqth.sig
    rules = []
    n = itertools.count(1)
    for cl, info in hset.executable:
        cond_pairs = [tuple(a.args) for a in cl.premise]
        if info.kind == "reductive":
            rules.append(Rule(f"hyp{next(n)}", info.lhs, info.rhs, (),
                              kind="hyp"))
        elif info.kind == "reductive_cond":
            conds = (RewriteCond(eqth.conj(
                [eqth.eq(u, v) for u, v in cond_pairs])),)
            rules.append(Rule(f"hyp{next(n)}", info.lhs, info.rhs, conds,
                              kind="hyp"))
        else:
            for (w, r) in info.candidates:
                z = sig.var(f"%z{next(n)}", _kind_top(sig, w.sort))
                conds = [MatchCond(z, r), OrderCond(w, z)]
                if info.kind == "usable_cond":
                    if info.strong:
                        conds.append(RewriteCond(eqth.conj(
                            [eqth.eq(u, v) for u, v in cond_pairs])))
                    else:
                        conds.extend(EqCond(u, v) for u, v in cond_pairs)
                rules.append(Rule(f"hyp{next(n)}", w, z, tuple(conds),
                                  kind="hyp"))
    for cl in hset.vee:
        lhs = eqth.disj(list(cl.delta))
        conds = ()
        if cl.premise:
            cond_terms = []
            for a in cl.premise:
                cond_terms.extend(a.args)
            if all(rpo.rpo_compare(lhs, t, prec) == rpo.GREATER
                   for t in cond_terms):
                conds = (RewriteCond(eqth.conj(list(cl.premise))),)
            else:
                conds = tuple(EqCond(u, v)
                              for u, v in (a.args for a in cl.premise))
        rules.append(Rule(f"hyp{next(n)}", lhs, eqth.top, conds, kind="hyp"))
    return tuple(rules)


def _kind_top(sig, sort):
    comp = sig.sorts.component(sort)
    members = [s for s in sig.sorts.sorts
               if sig.sorts.component(s) == comp]
    tops = [s for s in members if all(sig.sorts.leq(t, s) for t in members)]
    return tops[0] if tops else sort


# ---------------------------------------------------------------------------
# The simplification pass


def simp_transform(eqth: EqPredTheory, clauses, prec, cc_bound=200,
                   provenance_keep=True):
    """Normalize, split, close ground equations, inter-normalize, and
    re-partition a hypothesis set."""
    sig = eqth.sig
    engine = eqth.engine(prec=prec)

    # (1) equality-predicate normalization and clause splitting
    split = []
    inconsistent = False
    for cl in clauses:
        mc = Multiclause(cl.premise, (cl.delta,) if cl.delta else ((),))
        nf = engine.normalize(eqth.mc_term(mc))
        kind, mcs = eqth.term_mcs(nf)
        if kind == "bottom":
            inconsistent = True
            continue
        for m in mcs:
            for delta in m.concl:
                split.append(mk_clause(m.premise, delta, cl.provenance))
    part = classify_and_partition(eqth, split, prec)

    # (3) ground part: congruence closure, then renormalization with the
    # term rules and with the non-ground executable hypothesis rules (the
    # latter keeps ground rules from being preempted by ordered rewriting
    # with the other hypotheses)
    ground_pairs = [tuple(c.delta[0].args) for c in part.ground]
    grs = groundcc.cc(sig, ground_pairs, prec, bound=cc_bound)
    ground_keys = {c.key() for c in part.ground}
    nonground = HypothesisSet(
        tuple(c for c in part.clauses if c.key() not in ground_keys),
        tuple((c, i) for c, i in part.executable
              if c.key() not in ground_keys),
        part.vee, part.nonexec, ())
    ng_rules = compile_rules(eqth, nonground, prec)
    term_engine = RewriteTheory(sig, eqth.term_rules, ng_rules, prec=prec)
    gclauses = []
    gr_rules = []
    for r in grs.rules:
        l = _min_nf(term_engine, r.lhs)
        rr = _min_nf(term_engine, r.rhs)
        if l is rr:
            continue
        if rpo.rpo_compare(l, rr, prec) == rpo.LESS:
            l, rr = rr, l
        gclauses.append(mk_clause([], [eqth.eq(l, rr)], "hypothesis"))
        gr_rules.append(Rule(f"ge{len(gr_rules)}", l, rr, kind="hyp"))

    # (4)-(5) renormalize the remaining clauses with the ground rules
    ge_engine = RewriteTheory(sig, eqth.term_rules, gr_rules)
    final = list(gclauses)
    for cl in part.clauses:
        if any(cl is g for g in part.ground):
            continue
        out = _normalize_clause(sig, ge_engine, cl)
        final.extend(out)
    out = classify_and_partition(eqth, final, prec)
    out.inconsistent = inconsistent
    return out


def _min_nf(engine, t):
    nfs = engine.normal_form_set(t)
    return sorted(nfs, key=lambda u: u.key)[0]


def _normalize_clause(sig, ge_engine, cl, cap=8):
    sides = []
    for a in cl.premise + cl.delta:
        sides.append(a.args[0])
        sides.append(a.args[1])
    nf_sets = []
    for s in sides:
        nfs = sorted(ge_engine.normal_form_set(s), key=lambda t: t.key)[:cap]
        nf_sets.append(nfs)
    combos = [[]]
    for nfs in nf_sets:
        combos = [c + [n] for c in combos for n in nfs]
        if len(combos) > cap:
            combos = combos[:cap]
    outs = []
    np = len(cl.premise)
    for combo in combos:
        atoms = []
        for i in range(0, len(combo), 2):
            atoms.append(sig.app(EQ, [combo[i], combo[i + 1]]))
        outs.append(mk_clause(atoms[:np], atoms[np:], cl.provenance))
    seen = set()
    uniq = []
    for c in outs:
        if c.key() not in seen:
            seen.add(c.key())
            uniq.append(c)
    return uniq
