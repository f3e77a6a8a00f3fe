"""Order-sorted signatures, flattened terms, and substitutions.

Terms are interned per signature: after canonical construction, structural
equality modulo the commutativity/associativity-commutativity axioms is
plain object identity.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass


class SortError(Exception):
    pass


class IllSorted(SortError):
    pass


class SortViolation(SortError):
    pass


class SignatureError(Exception):
    pass


# ---------------------------------------------------------------------------
# Sorts


class SortGraph:
    """Poset of sorts given by subsort pairs.

    The reflexive-transitive closure is rebuilt on demand; cycles are
    rejected (antisymmetry).
    """

    def __init__(self):
        self.sorts = []
        self.pairs = set()
        self._leq = {}
        self._comp = {}
        self._dirty = True

    def add_sort(self, s: str):
        if s not in self.sorts:
            self.sorts.append(s)
            self._dirty = True

    def add_subsort(self, lo: str, hi: str):
        self.add_sort(lo)
        self.add_sort(hi)
        self.pairs.add((lo, hi))
        self._dirty = True

    def _rebuild(self):
        up = {s: {s} for s in self.sorts}
        changed = True
        while changed:
            changed = False
            for lo, hi in self.pairs:
                new = up[hi] - up[lo]
                if new:
                    up[lo] |= new
                    changed = True
        for s in self.sorts:
            for t in up[s]:
                if t != s and s in up[t]:
                    raise SignatureError(f"subsort cycle through {s} and {t}")
        self._leq = up
        # connected components of <= viewed as an undirected relation
        comp = {}
        for s in self.sorts:
            if s in comp:
                continue
            group = {s}
            frontier = [s]
            while frontier:
                a = frontier.pop()
                for b in self.sorts:
                    if b in group:
                        continue
                    if b in self._leq[a] or a in self._leq[b]:
                        group.add(b)
                        frontier.append(b)
            name = min(group)
            for b in group:
                comp[b] = name
        self._comp = comp
        self._dirty = False

    def leq(self, a: str, b: str) -> bool:
        if self._dirty:
            self._rebuild()
        return b in self._leq[a]

    def component(self, s: str) -> str:
        if self._dirty:
            self._rebuild()
        return self._comp[s]

    def components(self):
        if self._dirty:
            self._rebuild()
        out = {}
        for s, c in self._comp.items():
            out.setdefault(c, set()).add(s)
        return out

    def lower_sorts(self, s: str):
        if self._dirty:
            self._rebuild()
        return [t for t in self.sorts if s in self._leq[t]]

    def max_lower_bounds(self, a: str, b: str):
        """Maximal sorts below both a and b."""
        common = [s for s in self.sorts if self.leq(s, a) and self.leq(s, b)]
        return [s for s in common
                if not any(t != s and self.leq(s, t) for t in common)]


# ---------------------------------------------------------------------------
# Operator declarations


@dataclass(frozen=True)
class OpDecl:
    name: str
    args: tuple
    result: str
    ctor: bool = False
    kinded: bool = False


# ---------------------------------------------------------------------------
# Terms


class Var:
    __slots__ = ("name", "sort", "key", "_h")

    def __init__(self, name, sort):
        self.name = name
        self.sort = sort
        self.key = (0, name, sort)
        self._h = hash(("v", name, sort))

    is_var = True
    is_app = False
    ground = False
    skolem = None

    @property
    def vars(self):
        return frozenset((self,))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return self is other or (isinstance(other, Var)
                                 and self.name == other.name
                                 and self.sort == other.sort)

    def __repr__(self):
        return f"{self.name}:{self.sort}"


class App:
    __slots__ = ("op", "args", "sort", "skolem", "key", "ground", "vars",
                 "size", "_h")

    def __init__(self, op, args, sort, skolem, key):
        self.op = op
        self.args = args
        self.sort = sort
        self.skolem = skolem  # origin variable name for fresh constants
        self.key = key
        self.ground = all(a.ground for a in args)
        vs = frozenset()
        for a in args:
            vs |= a.vars
        self.vars = vs
        self.size = 1 + sum(getattr(a, "size", 1) for a in args)
        self._h = hash((op, args, skolem))

    is_var = False
    is_app = True

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        # interning makes equal canonical terms identical; this fallback
        # is only hit when terms cross signature instances (tests)
        return self is other or (isinstance(other, App)
                                 and self.op == other.op
                                 and self.skolem == other.skolem
                                 and self.args == other.args)

    def __repr__(self):
        if not self.args:
            return self.op
        return f"{self.op}({', '.join(map(repr, self.args))})"


Term = (Var, App)


# ---------------------------------------------------------------------------
# Signature


class Signature:
    """Operator declarations over a sort poset, plus structural axioms.

    Mutable while loading a theory; `freeze()` before proving.  All term
    construction goes through `var`/`app`/`skolem_const` so that AC/C
    arguments stay flattened and canonically ordered.
    """

    def __init__(self):
        self.sorts = SortGraph()
        self._decls = {}
        self.axioms = {}       # op -> "" | "C" | "AC"
        self.identity = {}     # op -> constant name
        self.prec = {}
        self.sigma1_ops = set()
        self.kind_sorts = set()
        self._vars = {}
        self._apps = {}
        self.skolems = {}
        self._ls_app = {}
        self.frozen = False

    # -- declarations

    def declare_op(self, name, args, result, ctor=False, axioms="",
                   identity=None, prec=None, kinded=False):
        if self.frozen:
            raise SignatureError("signature is frozen")
        if name in self.axioms and axioms and self.axioms[name] != axioms:
            raise SignatureError(f"conflicting axioms for {name}")
        for s in list(args) + [result]:
            self.sorts.add_sort(s)
        decl = OpDecl(name, tuple(args), result, ctor, kinded)
        self._decls.setdefault(name, []).append(decl)
        if axioms:
            if len(args) != 2:
                raise SignatureError(f"axiom attribute on non-binary op {name}")
            self.axioms[name] = axioms
        else:
            self.axioms.setdefault(name, "")
        if identity is not None:
            self.identity[name] = identity
        if prec is not None:
            if prec in self.prec.values() and self.prec.get(name) != prec:
                other = [o for o, p in self.prec.items() if p == prec][0]
                raise SignatureError(
                    f"precedence {prec} given to both {other} and {name}")
            self.prec[name] = prec
        return decl

    def decls(self, name):
        return self._decls.get(name, [])

    def has_op(self, name):
        return name in self._decls

    def ops(self):
        return list(self._decls)

    def is_ac(self, op):
        return self.axioms.get(op) == "AC"

    def is_c(self, op):
        return self.axioms.get(op) == "C"

    def is_pure_ctor(self, op):
        ds = self._decls.get(op, [])
        real = [d for d in ds if not d.kinded]
        return bool(real) and all(d.ctor for d in real)

    def freeze(self):
        self.sorts._rebuild()
        missing = [o for o in self._decls if o not in self.prec]
        if missing:
            raise SignatureError(f"operators without precedence: {missing}")
        self.frozen = True

    # -- term construction

    def var(self, name, sort):
        if sort not in self.sorts.sorts:
            raise IllSorted(f"unknown sort {sort}")
        key = (name, sort)
        v = self._vars.get(key)
        if v is None:
            v = self._vars[key] = Var(name, sort)
        return v

    def skolem_const(self, name, sort, origin):
        key = (name, (), origin, sort)
        t = self._apps.get(key)
        if t is None:
            okey = (1, 10 ** 9, name)
            t = App(name, (), sort, origin, okey)
            self._apps[key] = t
            self.skolems[name] = t
        return t

    def app(self, op, args):
        args = tuple(args)
        ax = self.axioms.get(op)
        if ax is None:
            raise IllSorted(f"undeclared operator {op}")
        if ax == "AC" and args:
            flat = []
            for a in args:
                if a.is_app and a.op == op and a.skolem is None:
                    flat.extend(a.args)
                else:
                    flat.append(a)
            if len(flat) == 1:
                return flat[0]
            args = tuple(sorted(flat, key=lambda t: t.key))
        elif ax == "C":
            if len(args) != 2:
                raise IllSorted(f"commutative op {op} needs 2 arguments")
            if args[1].key < args[0].key:
                args = (args[1], args[0])
        key = (op, args, None, None)
        t = self._apps.get(key)
        if t is None:
            sort = self._least_sort_app(op, args)
            okey = (1, self.prec.get(op, 10 ** 8), op,
                    tuple(a.key for a in args))
            t = App(op, args, sort, None, okey)
            self._apps[key] = t
        return t

    # -- sorts of terms

    def least_sort(self, t):
        return t.sort

    def _binary_result(self, op, s1, s2):
        best = None
        for d in self._decls[op]:
            if len(d.args) == 2 and self.sorts.leq(s1, d.args[0]) \
                    and self.sorts.leq(s2, d.args[1]):
                if best is None or self.sorts.leq(d.result, best):
                    best = d.result
        return best

    def _least_sort_app(self, op, args):
        sorts = [a.sort for a in args]
        ax = self.axioms.get(op, "")
        if ax == "AC" and len(args) > 2:
            acc = sorts[0]
            for s in sorts[1:]:
                acc = self._binary_result(op, acc, s)
                if acc is None:
                    raise IllSorted(
                        f"no declaration of {op} covers folded sort tuple")
            return acc
        best = None
        for d in self._decls[op]:
            if len(d.args) != len(args):
                continue
            if all(self.sorts.leq(s, ds) for s, ds in zip(sorts, d.args)):
                if best is None or self.sorts.leq(d.result, best):
                    best = d.result
        if best is None:
            raise IllSorted(f"no declaration of {op} covers {sorts}")
        return best

    # -- constructor terms

    def is_ctor_term(self, t, flex_consts=False):
        """Constructor term check; with flex_consts fresh constants count
        as variables of their sort (the degree-operation view)."""
        if t.is_var:
            return True
        if t.skolem is not None:
            return flex_consts
        if t.is_app:
            if not all(self.is_ctor_term(a, flex_consts) for a in t.args):
                return False
            return self._has_ctor_decl(t.op, [a.sort for a in t.args])
        return False

    def _has_ctor_decl(self, op, sorts):
        if self.axioms.get(op) == "AC" and len(sorts) > 2:
            acc = sorts[0]
            for s in sorts[1:]:
                nxt = None
                for d in self._decls[op]:
                    if d.ctor and len(d.args) == 2 \
                            and self.sorts.leq(acc, d.args[0]) \
                            and self.sorts.leq(s, d.args[1]):
                        if nxt is None or self.sorts.leq(d.result, nxt):
                            nxt = d.result
                if nxt is None:
                    return False
                acc = nxt
            return True
        for d in self._decls[op]:
            if d.ctor and len(d.args) == len(sorts) \
                    and all(self.sorts.leq(s, ds)
                            for s, ds in zip(sorts, d.args)):
                return True
        return False

    def is_sigma1_term(self, t):
        if t.is_var or t.skolem is not None:
            return True
        return t.op in self.sigma1_ops and all(
            self.is_sigma1_term(a) for a in t.args)


# ---------------------------------------------------------------------------
# Kind completion


def kind_complete(sig: Signature) -> Signature:
    """Add one top sort per connected component and lift every operator."""
    comps = sig.sorts.components()
    tops = {}
    for cname, members in sorted(comps.items()):
        if any(s in sig.kind_sorts for s in members):
            top = [s for s in members if s in sig.kind_sorts][0]
            tops[cname] = top
            continue
        top = f"[{cname}]"
        sig.sorts.add_sort(top)
        sig.kind_sorts.add(top)
        for s in sorted(members):
            sig.sorts.add_subsort(s, top)
        tops[cname] = top
    for name in list(sig._decls):
        seen = set()
        for d in list(sig._decls[name]):
            if d.kinded:
                continue
            kargs = tuple(tops[sig.sorts.component(s)] for s in d.args)
            kres = tops[sig.sorts.component(d.result)]
            if (kargs, kres) in seen:
                continue
            seen.add((kargs, kres))
            if not any(e.args == kargs and e.result == kres
                       for e in sig._decls[name]):
                sig._decls[name].append(OpDecl(name, kargs, kres, False, True))
    sig.sorts._rebuild()
    return sig


# ---------------------------------------------------------------------------
# Substitutions


def apply_subst(sig, t, theta):
    """Homomorphic substitution with re-flattening and canonical reorder."""
    if not theta:
        return t
    if t.is_var:
        u = theta.get(t)
        if u is None:
            return t
        if not sig.sorts.leq(u.sort, t.sort):
            raise SortViolation(f"{u!r} does not fit variable {t!r}")
        return u
    if not t.args or not (t.vars & theta.keys()):
        return t
    return sig.app(t.op, [apply_subst(sig, a, theta) for a in t.args])


def subst_skolems(sig, t, mapping):
    """Replace Skolem constants (by name) with terms; used by the degree
    operation turning fresh constants back into variables."""
    if t.is_var:
        return t
    if t.skolem is not None and t.op in mapping:
        return mapping[t.op]
    if not t.args:
        return t
    return sig.app(t.op, [subst_skolems(sig, a, mapping) for a in t.args])


def compose(sig, theta, sigma):
    """theta then sigma."""
    out = {x: apply_subst(sig, u, sigma) for x, u in theta.items()}
    for x, u in sigma.items():
        if x not in out:
            out[x] = u
    return {x: u for x, u in out.items() if u is not x}


# ---------------------------------------------------------------------------
# Preregularity check


def check_preregular(sig: Signature):
    """Verify least sorts are well-defined modulo the C/AC axioms and that
    identity axioms oriented as rules are sort-decreasing.

    Returns None when fine, else a human-readable counterexample string.
    """
    sorts = sig.sorts.sorts
    for op in sig.ops():
        arities = {len(d.args) for d in sig.decls(op) if not d.kinded}
        for n in arities:
            if n == 0:
                continue
            if n > 2:
                continue
            for tup in itertools.product(sorts, repeat=n):
                res = _ls_of_sorts(sig, op, tup)
                if res is None:
                    continue
                if sig.axioms.get(op) in ("C", "AC") and n == 2:
                    swapped = _ls_of_sorts(sig, op, (tup[1], tup[0]))
                    if swapped != res:
                        return (f"{op} not preregular: sorts {tup} give {res} "
                                f"but swapped give {swapped}")
        if sig.axioms.get(op) == "AC":
            for tup in itertools.product(sorts, repeat=3):
                l1 = _ls_of_sorts(sig, op, tup[:2])
                left = _ls_of_sorts(sig, op, (l1, tup[2])) if l1 else None
                r1 = _ls_of_sorts(sig, op, tup[1:])
                right = _ls_of_sorts(sig, op, (tup[0], r1)) if r1 else None
                if left != right:
                    return (f"{op} not preregular on triple {tup}: "
                            f"{left} vs {right}")
    for op, ident in sig.identity.items():
        idecl = sig.decls(ident)
        if not idecl:
            return f"identity element {ident} of {op} is not declared"
        isort = idecl[0].result
        for s in sorts:
            r = _ls_of_sorts(sig, op, (s, isort))
            if r is not None and not sig.sorts.leq(s, r):
                return (f"identity rule for {op} not sort-decreasing "
                        f"at argument sort {s}")
    return None


def _ls_of_sorts(sig, op, arg_sorts):
    best = None
    for d in sig.decls(op):
        if len(d.args) != len(arg_sorts):
            continue
        if all(sig.sorts.leq(s, ds) for s, ds in zip(arg_sorts, d.args)):
            if best is None or sig.sorts.leq(d.result, best):
                best = d.result
    return best


# ---------------------------------------------------------------------------
# Rendering


def render(t, infix_ops=None):
    infix = infix_ops or set()
    if t.is_var:
        return t.name
    if not t.args:
        return t.op
    if t.op in infix:
        inner = f" {t.op} ".join(
            _paren(a, infix) for a in t.args)
        return inner
    return f"{t.op}({', '.join(render(a, infix) for a in t.args)})"


def _paren(t, infix):
    s = render(t, infix)
    if t.is_app and t.args and t.op in infix:
        return f"({s})"
    return s
