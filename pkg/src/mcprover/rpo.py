"""Recursive path ordering modulo the structural axioms.

Symbols carry user-assigned distinct precedences; AC/C symbols compare by
multiset status on flattened arguments and everything else lexicographically.
Fresh constants slot in above pure constructors and below defined symbols,
later introductions comparing higher.
"""

from __future__ import annotations

from dataclasses import dataclass

GREATER = "greater"
LESS = "less"
EQUAL = "equal"
INCOMPARABLE = "incomparable"


class PrecedenceError(Exception):
    pass


@dataclass(frozen=True)
class PrecedenceTable:
    sig: object
    ext: tuple = ()

    def extend(self, new_constants):
        names = []
        for c in new_constants:
            name = c if isinstance(c, str) else c.op
            if name in self.ext or self.sig.has_op(name):
                raise PrecedenceError(f"duplicate constant {name}")
            names.append(name)
        if not names:
            return self
        return PrecedenceTable(self.sig, self.ext + tuple(names))

    def rank(self, t):
        """Total injective rank on heads: (band, value).

        Band 0: pure-constructor symbols by declared precedence.
        Band 1: fresh constants by introduction order.
        Band 2: defined symbols by declared precedence.
        """
        if t.is_app and t.skolem is not None:
            if t.op in self.ext:
                return (1, self.ext.index(t.op))
            # unregistered fresh constants order after registered ones
            return (1, len(self.ext) + abs(hash(t.op)) % 997 + 1)
        op = t.op
        if self.sig.is_pure_ctor(op):
            return (0, self.sig.prec[op])
        return (2, self.sig.prec.get(op, 10 ** 8))


def extend_precedence(prec: PrecedenceTable, new_constants):
    return prec.extend(new_constants)


def rpo_compare(t, u, prec: PrecedenceTable):
    r = _cmp(t, u, prec)
    return r


def _cmp(t, u, prec):
    if t is u or t == u:
        return EQUAL
    if t.is_var and u.is_var:
        return INCOMPARABLE
    if t.is_var:
        return LESS if t in u.vars else INCOMPARABLE
    if u.is_var:
        return GREATER if u in t.vars else INCOMPARABLE
    # subterm cases: an argument of one side already dominates the other
    if any(_cmp(a, u, prec) in (GREATER, EQUAL) for a in t.args):
        return GREATER
    if any(_cmp(b, t, prec) in (GREATER, EQUAL) for b in u.args):
        return LESS
    rt, ru = prec.rank(t), prec.rank(u)
    if rt > ru:
        if all(_cmp(t, b, prec) == GREATER for b in u.args):
            return GREATER
        return INCOMPARABLE
    if rt < ru:
        if all(_cmp(u, a, prec) == GREATER for a in t.args):
            return LESS
        return INCOMPARABLE
    # same head symbol
    sig = prec.sig
    if sig.is_ac(t.op) or sig.is_c(t.op):
        return _mul_cmp(list(t.args), list(u.args), prec)
    return _lex_cmp(t, u, prec)


def _lex_cmp(t, u, prec):
    if len(t.args) != len(u.args):
        # overloaded arity mismatch: fall back to multiset comparison
        return _mul_cmp(list(t.args), list(u.args), prec)
    for a, b in zip(t.args, u.args):
        c = _cmp(a, b, prec)
        if c == EQUAL:
            continue
        if c == GREATER:
            if all(_cmp(t, x, prec) == GREATER for x in u.args):
                return GREATER
            return INCOMPARABLE
        if c == LESS:
            if all(_cmp(u, x, prec) == GREATER for x in t.args):
                return LESS
            return INCOMPARABLE
        return INCOMPARABLE
    return EQUAL


def _mul_cmp(ts, us, prec):
    # delete pairs equal modulo the axioms (canonical terms: identity)
    ts = list(ts)
    us = list(us)
    for a in list(ts):
        for b in list(us):
            if a is b or a == b:
                ts.remove(a)
                us.remove(b)
                break
    if not ts and not us:
        return EQUAL
    if _mul_greater(ts, us, prec):
        return GREATER
    if _mul_greater(us, ts, prec):
        return LESS
    return INCOMPARABLE


def _mul_greater(ts, us, prec):
    if not ts:
        return False
    return all(any(_cmp(a, b, prec) == GREATER for a in ts) for b in us)


# ---------------------------------------------------------------------------
# Equation taxonomy


@dataclass(frozen=True)
class Classified:
    kind: str            # reductive | reductive_cond | usable | usable_cond
    #                    # | unusable
    lhs: object = None   # oriented left side when reductive
    rhs: object = None
    candidates: tuple = ()
    strong: bool = False  # conditional: every candidate exceeds the condition


def classify_equation(cond, left, right, prec: PrecedenceTable):
    """Place `cond => left = right` in the ordered-rewriting taxonomy."""
    cond_terms = []
    for (u, v) in cond:
        cond_terms.extend((u, v))
    cvars = set()
    for w in cond_terms:
        cvars |= w.vars

    def covers(w, other):
        return other.vars <= w.vars

    cands = []
    if covers(left, right):
        cands.append((left, right))
    if covers(right, left):
        cands.append((right, left))

    c = rpo_compare(left, right, prec)
    reductive = None
    if c == GREATER and covers(left, right):
        reductive = (left, right)
    elif c == LESS and covers(right, left):
        reductive = (right, left)

    if not cond:
        if reductive:
            return Classified("reductive", reductive[0], reductive[1])
        if cands:
            return Classified("usable", candidates=tuple(cands))
        return Classified("unusable")

    if reductive:
        w, r = reductive
        if cvars <= w.vars:
            strong = all(rpo_compare(w, ct, prec) == GREATER
                         for ct in cond_terms)
            return Classified("reductive_cond", w, r, strong=strong)
    ok = [(w, r) for (w, r) in cands if cvars <= w.vars]
    if ok:
        strong = all(
            all(rpo_compare(w, ct, prec) == GREATER for ct in cond_terms)
            for (w, r) in ok)
        return Classified("usable_cond", candidates=tuple(ok), strong=strong)
    return Classified("unusable")
