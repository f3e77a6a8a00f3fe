"""Theory/goal/script parsing, the command-line driver, proof persistence,
and the line-JSON session service used by the explorer frontend.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import socketserver
import sys
import threading
from dataclasses import dataclass, field

from . import engine, eqpred, groundcc, rpo, variants
from .engine import (CompiledTheory, GeneratorSet, Goal, ProofTree,
                     RuleError, mc_vars)
from .eqpred import Multiclause, mk_multiclause
from .kernel import (Signature, SignatureError, check_preregular,
                     kind_complete)
from .rewrite import BudgetExhausted, EqCond, Rule, u_transform


class ParseError(Exception):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line else msg)


class TheoryMismatch(Exception):
    pass


class ReplayFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# Tokenizing and term parsing


def _tokens(text):
    out = []
    cur = ""
    for ch in text:
        if ch in "(),|":
            if cur:
                out.append(cur)
                cur = ""
            out.append(ch)
        elif ch.isspace():
            if cur:
                out.append(cur)
                cur = ""
        else:
            cur += ch
    if cur:
        out.append(cur)
    return out


class TermParser:
    def __init__(self, sig: Signature, variables, infix, line=None,
                 consts=()):
        self.sig = sig
        self.vars = variables  # name -> Var
        self.infix = infix
        self.line = line
        self.consts = list(consts)  # in-scope fresh constants

    def parse(self, text):
        toks = _tokens(text)
        t, rest = self._term(toks)
        if rest:
            raise ParseError(f"trailing input {' '.join(rest)!r} "
                             f"after term in {text!r}", self.line)
        return t

    def _term(self, toks):
        first, toks = self._primary(toks)
        if not toks or toks[0] not in self.infix:
            return first, toks
        op = toks[0]
        args = [first]
        while toks and toks[0] == op:
            nxt, toks = self._primary(toks[1:])
            args.append(nxt)
        if toks and toks[0] in self.infix:
            raise ParseError(
                f"mixed infix operators need parentheses near {toks[0]!r}",
                self.line)
        if len(args) > 2 and not self.sig.is_ac(op):
            raise ParseError(
                f"operator {op} is not associative: parenthesize", self.line)
        return self.sig.app(op, args), toks

    def _primary(self, toks):
        if not toks:
            raise ParseError("unexpected end of term", self.line)
        tok = toks[0]
        if tok == "(":
            t, rest = self._term(toks[1:])
            if not rest or rest[0] != ")":
                raise ParseError("missing closing parenthesis", self.line)
            return t, rest[1:]
        if tok in (")", ","):
            raise ParseError(f"unexpected {tok!r}", self.line)
        rest = toks[1:]
        if rest and rest[0] == "(":
            args = []
            rest = rest[1:]
            if rest and rest[0] == ")":
                rest = rest[1:]
            else:
                while True:
                    a, rest = self._term(rest)
                    args.append(a)
                    if rest and rest[0] == ",":
                        rest = rest[1:]
                        continue
                    if rest and rest[0] == ")":
                        rest = rest[1:]
                        break
                    raise ParseError("malformed argument list", self.line)
            return self.sig.app(tok, args), rest
        return self._atom(tok), rest

    def _atom(self, tok):
        if tok.startswith("@"):
            origin = tok[1:]
            hits = [c for c in self.consts if c.skolem == origin]
            if len(hits) != 1:
                raise ParseError(
                    f"{tok!r} names {len(hits)} constants here", self.line)
            return hits[0]
        if ":" in tok and not self.sig.has_op(tok):
            name, sort = tok.rsplit(":", 1)
            if "#" in name:
                return self.sig.skolem_const(name, sort,
                                             name.split("#")[0])
            return self.sig.var(name, sort)
        if tok in self.vars:
            return self.vars[tok]
        if self.sig.has_op(tok):
            return self.sig.app(tok, [])
        if "#" in tok:
            known = self.sig.skolems.get(tok)
            if known is not None:
                return known
            raise ParseError(f"unknown fresh constant {tok!r}", self.line)
        raise ParseError(f"unknown identifier {tok!r}", self.line)


def render(sig, t, infix):
    if t.is_var:
        return t.name
    if not t.args:
        return t.op
    if t.op in infix:
        parts = []
        for a in t.args:
            s = render(sig, a, infix)
            if a.is_app and a.args and a.op in infix:
                s = f"({s})"
            parts.append(s)
        return f" {t.op} ".join(parts)
    return f"{t.op}({', '.join(render(sig, a, infix) for a in t.args)})"


def render_src(t):
    """Unambiguous functional rendering used in proof files."""
    if t.is_var:
        return f"{t.name}:{t.sort}"
    if not t.args:
        return t.op
    return f"{t.op}({', '.join(render_src(a) for a in t.args)})"


def render_mc(sig, mc: Multiclause, infix, src=False):
    def atom(a):
        if src:
            return f"{render_src(a.args[0])} = {render_src(a.args[1])}"
        return (f"{render(sig, a.args[0], infix)} = "
                f"{render(sig, a.args[1], infix)}")

    prem = ", ".join(atom(a) for a in mc.premise) or "top"
    if not mc.concl:
        concl = "top"
    else:
        parts = []
        for d in mc.concl:
            s = " \\/ ".join(atom(a) for a in d) if d else "bottom"
            if len(d) > 1 and len(mc.concl) > 1:
                s = f"({s})"
            parts.append(s)
        concl = " /\\ ".join(parts)
    return f"{prem} -> {concl}"


# ---------------------------------------------------------------------------
# Splitting respecting parentheses


def _split_top(text, seps):
    parts = []
    depth = 0
    i = 0
    cur = ""
    while i < len(text):
        for sep in seps:
            if depth == 0 and text.startswith(sep, i):
                parts.append(cur)
                cur = ""
                i += len(sep)
                break
        else:
            ch = text[i]
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            cur += ch
            i += 1
    parts.append(cur)
    return [p.strip() for p in parts]


# ---------------------------------------------------------------------------
# Theory files


@dataclass
class LoadedTheory:
    compiled: CompiledTheory
    variables: dict
    infix: set
    source: str

    def parser(self, extra_vars=None, line=None):
        vs = dict(self.variables)
        if extra_vars:
            vs.update(extra_vars)
        return TermParser(self.compiled.sig, vs, self.infix, line)

    def parse_mc(self, text, extra_vars=None, line=None):
        tp = self.parser(extra_vars, line)
        eqth = self.compiled.eqth
        halves = _split_top(text, ["->"])
        if len(halves) != 2:
            raise ParseError(f"multiclause needs one '->': {text!r}", line)
        prem_text, concl_text = halves
        prem = []
        if prem_text.strip() not in ("top", ""):
            for part in _split_top(prem_text, ["/\\", ","]):
                if not part:
                    continue
                u, v = _split_eq(part, line)
                prem.append(eqth.eq(tp.parse(u), tp.parse(v)))
        concl = []
        if concl_text.strip() == "bottom":
            concl = [[]]
        elif concl_text.strip() != "top":
            for part in _split_top(concl_text, ["/\\"]):
                part = part.strip()
                if part.startswith("(") and part.endswith(")") \
                        and _balanced(part[1:-1]):
                    part = part[1:-1]
                if part == "bottom":
                    concl.append([])
                    continue
                delta = []
                for eqtext in _split_top(part, ["\\/"]):
                    u, v = _split_eq(eqtext, line)
                    delta.append(eqth.eq(tp.parse(u), tp.parse(v)))
                concl.append(delta)
        return mk_multiclause(prem, concl)


def _balanced(text):
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _split_eq(text, line):
    sides = _split_top(text, ["="])
    if len(sides) != 2:
        raise ParseError(f"expected one '=' in {text!r}", line)
    return sides[0], sides[1]


def parse_theory(text, budget=10000, variant_depth=32):
    sig = Signature()
    name = "theory"
    variables = {}
    infix = set()
    eq_specs = []
    fvp_ops = []
    pending_sorts = []
    lines = text.splitlines()
    for no, raw in enumerate(lines, 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        words = line.split()
        head = words[0]
        if head == "theory":
            name = words[1]
        elif head == "endtheory":
            break
        elif head == "sorts":
            for s in words[1:]:
                sig.sorts.add_sort(s)
        elif head in ("subsort", "subsorts"):
            if "<" not in words:
                raise ParseError("subsort needs '<'", no)
            cut = words.index("<")
            for lo in words[1:cut]:
                for hi in words[cut + 1:]:
                    sig.sorts.add_subsort(lo, hi)
        elif head == "op":
            _parse_op(sig, line, no, infix)
        elif head in ("var", "vars"):
            if ":" not in words:
                raise ParseError("variable declaration needs ':'", no)
            cut = words.index(":")
            sort = words[cut + 1]
            sig.sorts.add_sort(sort)
            for vn in words[1:cut]:
                variables[vn] = sig.var(vn, sort)
        elif head in ("eq", "ceq"):
            eq_specs.append((no, line))
        elif head == "fvp":
            if words[1] != "ops":
                raise ParseError("expected 'fvp ops ...'", no)
            fvp_ops = [w.strip("_") for w in words[2:]]
        else:
            raise ParseError(f"unknown declaration {head!r}", no)
    bad = check_preregular(sig)
    if bad:
        raise ParseError(f"signature not preregular: {bad}")
    kind_complete(sig)
    missing = [o for o in sig.ops() if o not in sig.prec]
    if missing:
        raise ParseError(f"operators without precedence: {missing}")

    tp = TermParser(sig, variables, infix)
    rules = []
    variant_rules = []
    for no, line in eq_specs:
        tp.line = no
        rule, is_variant = _parse_eq(sig, tp, line, no, len(rules))
        rules.append(rule)
        if is_variant:
            variant_rules.append(rule)
    rules, urules = u_transform(sig, rules, variant_depth)
    for r in rules:
        theta = None
        from .rewrite import check_sort_decreasing
        theta = check_sort_decreasing(sig, r)
        if theta is not None:
            raise ParseError(
                f"rule {r.label} is not sort-decreasing under "
                f"{{{', '.join(f'{k.name}->{v.sort}' for k, v in theta.items())}}}")
    eqth = eqpred.build_eqpred_theory(sig, rules + urules, budget=budget)
    fvp = None
    if fvp_ops:
        sig.sigma1_ops = set(fvp_ops) | {eqpred.TOP, eqpred.BOT}
        fvp = variants.FvpSubtheory(sig, variant_rules, depth=variant_depth,
                                    ops=frozenset(fvp_ops))
        suspect = variants.check_fvp(sig, fvp, depth=variant_depth)
        if suspect is not None:
            raise ParseError(
                f"marked variant fragment is not finite-variant: "
                f"search diverged on {render_src(suspect)}")
    digest = hashlib.sha256(text.encode()).hexdigest()
    compiled = CompiledTheory(sig, eqth, fvp, name, digest, infix)
    return LoadedTheory(compiled, variables, infix, text)


def _parse_op(sig, line, no, infix):
    body = line[2:].strip()
    attrs = ""
    if "[" in body:
        body, attrs = body.split("[", 1)
        attrs = attrs.rstrip("] ").strip()
    if ":" not in body:
        raise ParseError("op declaration needs ':'", no)
    opname, rest = body.split(":", 1)
    opname = opname.strip()
    if "->" not in rest:
        raise ParseError("op declaration needs '->'", no)
    argpart, respart = rest.split("->", 1)
    args = argpart.split()
    result = respart.strip()
    is_infix = opname.startswith("_") and opname.endswith("_") \
        and len(args) == 2
    if is_infix:
        opname = opname[1:-1]
    words = attrs.split()
    ctor = "ctor" in words
    assoc = "assoc" in words
    comm = "comm" in words
    if assoc and not comm:
        raise ParseError(
            f"operator {opname}: associativity without commutativity is "
            f"not supported", no)
    axioms = "AC" if (assoc and comm) else ("C" if comm else "")
    prec = None
    identity = None
    for i, w in enumerate(words):
        if w == "prec":
            prec = int(words[i + 1])
        if w.startswith("id("):
            identity = w[3:-1]
    try:
        sig.declare_op(opname, args, result, ctor=ctor, axioms=axioms,
                       identity=identity, prec=prec)
    except SignatureError as e:
        raise ParseError(str(e), no)
    if is_infix:
        infix.add(opname)


def _parse_eq(sig, tp, line, no, idx):
    body = line.split(None, 1)[1]
    attrs = ""
    if body.rstrip().endswith("]") and "[" in body:
        body, attrs = body.rsplit("[", 1)
        attrs = attrs.rstrip("] ")
    is_variant = "variant" in attrs.split()
    cond_texts = []
    if line.startswith("ceq"):
        if " if " not in body:
            raise ParseError("ceq needs an 'if' part", no)
        body, condpart = body.split(" if ", 1)
        cond_texts = _split_top(condpart, ["/\\"])
    l, r = _split_eq(body, no)
    lhs, rhs = tp.parse(l), tp.parse(r)
    conds = []
    for c in cond_texts:
        cu, cv = _split_eq(c, no)
        conds.append(EqCond(tp.parse(cu), tp.parse(cv)))
    if lhs.is_var:
        raise ParseError("rule left side cannot be a variable", no)
    extra = rhs.vars - lhs.vars
    for c in conds:
        extra |= (c.lhs.vars | c.rhs.vars) - lhs.vars
    if extra:
        raise ParseError(
            f"variables {sorted(v.name for v in extra)} not in the left "
            f"side", no)
    if is_variant and conds:
        raise ParseError("variant equations must be unconditional", no)
    return Rule(f"eq{idx + 1}", lhs, rhs, tuple(conds)), is_variant


# ---------------------------------------------------------------------------
# Goal files


@dataclass
class Problem:
    name: str
    mc: Multiclause
    skolem_sig: tuple = ()


def parse_goals(ltheory: LoadedTheory, text):
    problems = []
    extra_vars = {}
    sig = ltheory.compiled.sig
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        words = line.split()
        if words[0] == "goals":
            continue
        if words[0] in ("var", "vars"):
            cut = words.index(":")
            sort = words[cut + 1]
            for vn in words[1:cut]:
                extra_vars[vn] = sig.var(vn, sort)
            continue
        if words[0] == "goal":
            rest = line.split(None, 1)[1]
            gname, body = rest.split(":", 1)
            gname = gname.strip()
            skolem = []
            body = body.strip()
            while body.startswith("exists "):
                decl, body = body.split(".", 1)
                decl = decl[len("exists "):].strip()
                fname, sigpart = decl.split(":", 1)
                fname = fname.strip()
                if "->" in sigpart:
                    argpart, res = sigpart.split("->", 1)
                    argsorts = tuple(argpart.split())
                else:
                    argsorts, res = (), sigpart
                res = res.strip()
                frozen = sig.frozen
                sig.frozen = False
                if not sig.has_op(fname):
                    nextprec = max([p for p in sig.prec.values()
                                    if p < 10 ** 5], default=0) + 1
                    sig.declare_op(fname, list(argsorts), res,
                                   prec=nextprec)
                sig.frozen = frozen
                skolem.append((fname, argsorts, res))
                body = body.strip()
            mc = ltheory.parse_mc(body, extra_vars, no)
            problems.append(Problem(gname, mc, tuple(skolem)))
            continue
        raise ParseError(f"unknown goal declaration {words[0]!r}", no)
    return problems, extra_vars


# ---------------------------------------------------------------------------
# Scripts


@dataclass
class Script:
    gensets: list = field(default_factory=list)
    equivalences: list = field(default_factory=list)
    lemmas: dict = field(default_factory=dict)
    proofs: dict = field(default_factory=dict)   # goal name -> [commands]
    extra_vars: dict = field(default_factory=dict)


def parse_script(ltheory: LoadedTheory, text):
    sc = Script()
    sig = ltheory.compiled.sig
    current = None           # ("prove", name) | ("lemma", name)
    lemma_mc = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#")[0].strip()
        if not line:
            continue
        words = line.split()
        head = words[0]
        if head == "script":
            continue
        if head in ("var", "vars"):
            cut = words.index(":")
            sort = words[cut + 1]
            for vn in words[1:cut]:
                sc.extra_vars[vn] = sig.var(vn, sort)
            continue
        if head == "genset":
            gname = words[1]
            if words[2] != "for":
                raise ParseError("expected 'genset NAME for SORT = ...'", no)
            sort = words[3]
            body = line.split("=", 1)[1]
            tp = ltheory.parser(sc.extra_vars, no)
            pats = tuple(tp.parse(p) for p in _split_top(body, ["|"]))
            sc.gensets.append(GeneratorSet(gname, sort, pats))
            continue
        if head == "equivalence":
            rest = line.split(None, 1)[1]
            ename, body = rest.split(":", 1)
            parts = _split_top(body, ["<=>"])
            if len(parts) != 2:
                raise ParseError("equivalence needs '<=>'", no)
            left, right = parts
            if " by " in right:
                right, method = right.rsplit(" by ", 1)
            else:
                method = "varsat"
            tp = ltheory.parser(sc.extra_vars, no)
            lu, lv = _split_eq(left.strip().strip("()"), no)
            ru, rv = _split_eq(right.strip().strip("()"), no)
            sc.equivalences.append({
                "name": ename.strip(),
                "lhs": (tp.parse(lu), tp.parse(lv)),
                "rhs": (tp.parse(ru), tp.parse(rv)),
                "method": method.strip(),
            })
            continue
        if head == "lemma":
            rest = line.split(None, 1)[1]
            lname, body = rest.split(":", 1)
            lname = lname.strip()
            lemma_mc = ltheory.parse_mc(body.strip(), sc.extra_vars, no)
            sc.lemmas[lname] = {"mc": lemma_mc, "commands": []}
            current = ("lemma", lname)
            continue
        if head == "prove":
            current = ("prove", words[1])
            sc.proofs[words[1]] = []
            continue
        if head in ("endproof", "endlemma"):
            current = None
            continue
        if current is None:
            raise ParseError(f"command {head!r} outside a proof block", no)
        cmd = (no, line)
        if current[0] == "lemma":
            sc.lemmas[current[1]]["commands"].append(cmd)
        else:
            sc.proofs[current[1]].append(cmd)
    return sc


# ---------------------------------------------------------------------------
# Command interpretation


class ProofRun:
    """Executes script commands against one proof tree."""

    def __init__(self, ltheory: LoadedTheory, tree: ProofTree,
                 extra_vars=None, lemmas=None):
        self.lt = ltheory
        self.tree = tree
        self.extra_vars = extra_vars or {}
        self.lemmas = lemmas or {}
        self.applications = 0
        self.log = []

    def current(self):
        pend = self.tree.pending()
        if not pend:
            raise RuleError("no pending goals")
        return pend[0]

    def run(self, commands):
        for no, line in commands:
            try:
                self.command(line)
            except (RuleError, BudgetExhausted, variants.DepthBoundExceeded,
                    groundcc.DnfCapExceeded) as e:
                raise RuleError(f"line {no}: {line!r}: {e}")
        return self

    def command(self, line):
        words = line.split()
        head = words[0]
        tree = self.tree
        if head == "auto":
            n = engine.auto(tree)
            self.applications += n
            self.log.append(f"auto ({n} applications)")
            return
        if head == "eps" and len(words) > 1 and words[1] == "all":
            pend = list(tree.pending())
            changed = False
            for g in pend:
                try:
                    tree.apply("eps", g.gid, {})
                    changed = True
                except RuleError:
                    continue
            if changed:
                self.applications += 1
                self.log.append("eps all")
            return
        g = self.current()
        params = self._params(head, words[1:], g)
        rule = {"eqh": "eq", "witness": "exists"}.get(head, head)
        kids = tree.apply(rule, g.gid, params)
        self.applications += 1
        self.log.append(line)
        if head == "le" and kids:
            # prove the restated lemma right away from its stored script
            spec = self.lemmas.get(params.get("name"), {})
            sub = ProofRun(self.lt, _SubtreeView(tree, kids[0].gid),
                           self.extra_vars, self.lemmas)
            sub.run(spec.get("commands", []))
            if sub.tree.pending():
                raise RuleError(
                    f"lemma {params.get('name')} did not close here")

    def _params(self, head, args, goal):
        sig = self.lt.compiled.sig
        vs = dict(self.lt.variables)
        vs.update(self.extra_vars)
        tp = TermParser(sig, vs, self.lt.infix, consts=goal.theory.consts)
        if head in ("eps", "cvul", "cvufr", "subl", "subr", "cs", "icc",
                    "varsat"):
            return {}
        if head in ("gsi", "cas"):
            name, gname = args[0], args[1]
            target = None
            for v in mc_vars(goal.mc):
                if v.name == name:
                    target = v
            if target is None:
                target = goal.theory.const_named(name)
            if target is None and head == "gsi":
                raise RuleError(f"no goal variable named {name}")
            if target is None:
                raise RuleError(f"no variable or constant named {name}")
            key = "var" if head == "gsi" else "target"
            return {key: target, "genset": gname}
        if head in ("ni", "ns"):
            if args[0] == "on":
                term = tp.parse(" ".join(args[1:]))
                occs = engine.mc_subterm_occurrences(goal.mc, term)
                if not occs:
                    raise RuleError(f"term {' '.join(args[1:])} does not "
                                    f"occur in the goal")
                return {"occ": occs[0]}
            opname = args[0].strip("_")
            idx = int(args[1]) if len(args) > 1 else 0
            occ = self._find_op_occ(goal, opname, idx, region=None)
            return {"occ": occ}
        if head == "va":
            opname = args[0].strip("_")
            idx = int(args[1]) if len(args) > 1 else 0
            occ = self._find_op_occ(goal, opname, idx, region="prem")
            return {"occ": occ}
        if head in ("erl", "err"):
            return {"equivalence": args[0]}
        if head == "le":
            lname = args[0]
            if lname not in self.lemmas:
                raise RuleError(f"unknown lemma {lname}")
            return {"lemma": self.lemmas[lname]["mc"], "name": lname}
        if head == "cut":
            text = " ".join(args)
            eqth = self.lt.compiled.eqth
            atoms = []
            for part in _split_top(text, ["/\\", ","]):
                u, v = _split_eq(part, None)
                atoms.append(eqth.eq(tp.parse(u), tp.parse(v)))
            return {"conjunction": atoms}
        if head == "sp":
            text = " ".join(args)
            scope = "initial"
            if text.endswith("scope current"):
                text = text[:-len("scope current")].strip()
                scope = "current"
            cases = []
            for case in _split_top(text, ["\\/"]):
                case = case.strip()
                if case.startswith("(") and case.endswith(")") \
                        and _balanced(case[1:-1]):
                    case = case[1:-1]
                atoms = []
                for part in _split_top(case, ["/\\", ","]):
                    u, v = _split_eq(part, None)
                    atoms.append(self.lt.compiled.eqth.eq(
                        tp.parse(u), tp.parse(v)))
                cases.append(atoms)
            return {"cases": cases, "scope": scope}
        if head == "eqh":
            # user-guided equality step with hypothesis clause N of the
            # current goal, applied at an operator occurrence
            idx = int(args[0])
            clauses = goal.theory.hyps.clauses
            if idx >= len(clauses):
                raise RuleError(f"goal has no hypothesis #{idx}")
            cl = clauses[idx]
            if len(cl.delta) != 1:
                raise RuleError("hypothesis is not an equation")
            u, v = cl.delta[0].args
            if len(args) > 1 and args[1] == "flip":
                u, v = v, u
                rest = args[2:]
            else:
                rest = args[1:]
            opname = rest[0].strip("_")
            k = int(rest[1]) if len(rest) > 1 else 0
            occ = self._find_op_occ(goal, opname, k, region=None)
            return {"occ": occ,
                    "condition": [tuple(a.args) for a in cl.premise],
                    "lhs": u, "rhs": v, "subst": {}}
        if head == "witness":
            interp = {}
            text = " ".join(args)
            for part in _split_top(text, [";"]):
                lhs, rhs = part.split("=", 1)
                lhs = lhs.strip()
                if "(" in lhs:
                    fname = lhs.split("(")[0]
                    argnames = lhs[lhs.index("(") + 1:lhs.rindex(")")]
                    pvars = [tp.parse(a.strip())
                             for a in argnames.split(",")]
                else:
                    fname, pvars = lhs, []
                interp[fname] = (pvars, tp.parse(rhs.strip()))
            return {"interpretation": interp}
        raise RuleError(f"unknown command {head!r}")

    def _find_op_occ(self, goal, opname, idx, region=None):
        occs = []
        seen = set()
        mc = goal.mc

        def scan(t, mk, path=()):
            if t.is_app and t.op == opname and t.skolem is None:
                occs.append(mk(path))
            if t.is_app:
                for i, a in enumerate(t.args):
                    scan(a, mk, path + (i,))

        for i, a in enumerate(mc.premise):
            for side in (0, 1):
                scan(a.args[side],
                     lambda p, i=i, s=side: ("prem", i, 0, s, p))
        if region != "prem":
            for l, d in enumerate(mc.concl):
                for k, a in enumerate(d):
                    for side in (0, 1):
                        scan(a.args[side],
                             lambda p, k=k, l=l, s=side:
                             ("concl", k, l, s, p))
        if idx >= len(occs):
            raise RuleError(f"no occurrence #{idx} of {opname} "
                            f"in goal {goal.gid}")
        return occs[idx]


def install_equivalence(lt: LoadedTheory, spec):
    """Prove both directions (variant satisfiability or a script) and
    register the oriented rewrite for the equation-rewriting rules."""
    ct = lt.compiled
    sig = ct.sig
    eqth = ct.eqth
    (lu, lv), (ru, rv) = spec["lhs"], spec["rhs"]
    lhs_atom = eqth.eq(lu, lv)
    rhs_atom = eqth.eq(ru, rv)
    if not (rhs_atom.vars <= lhs_atom.vars):
        raise RuleError("equivalence right side introduces variables")
    prec = ct.prec0
    if rpo.rpo_compare(lhs_atom, rhs_atom, prec) != rpo.GREATER:
        raise RuleError("equivalence is not reductive left-to-right")
    if spec["method"] == "varsat":
        if ct.fvp is None:
            raise RuleError("varsat proof needs a variant fragment")
        r1, _ = variants.var_sat_decide(sig, [(lu, lv)], [[(ru, rv)]],
                                        ct.fvp)
        r2, _ = variants.var_sat_decide(sig, [(ru, rv)], [[(lu, lv)]],
                                        ct.fvp)
        if r1 != variants.VALID or r2 != variants.VALID:
            raise RuleError(
                f"equivalence {spec['name']} not proved: {r1}/{r2}")
    else:
        raise RuleError(f"unknown equivalence proof method "
                        f"{spec['method']!r}")
    ct.equivalences[spec["name"]] = {
        "lhs": lhs_atom, "rhs": rhs_atom, "proved": True}


def run_script(lt: LoadedTheory, problems, script: Script, goal_vars=None,
               default_auto=False):
    """Execute a whole script; returns {goal name: report dict}.

    Goals without a proof block stay untouched (one pending root) unless
    `default_auto` asks for the automatic simplification loop."""
    ct = lt.compiled
    run_vars = dict(goal_vars or {})
    run_vars.update(script.extra_vars)
    eqth = ct.eqth
    for gs in script.gensets:
        bad = engine.check_generator_set(ct.sig, eqth, gs)
        if bad is not None:
            raise RuleError(
                f"generator set {gs.name} misses {render_src(bad)}")
        ct.gensets[gs.name] = gs
    for spec in script.equivalences:
        install_equivalence(lt, spec)
    # lemmas prove against fresh trees and are stored for LE
    for lname, spec in script.lemmas.items():
        ltree = ProofTree(ct, spec["mc"])
        run = ProofRun(lt, ltree, run_vars, script.lemmas)
        run.run(spec["commands"])
        if not ltree.closed():
            raise RuleError(f"lemma {lname} did not close")
        spec["tree"] = ltree
        ct.lemmas[lname] = spec["mc"]
    reports = {}
    for prob in problems:
        cmds = script.proofs.get(prob.name)
        tree = ProofTree(ct, prob.mc, prob.skolem_sig)
        run = ProofRun(lt, tree, run_vars, script.lemmas)
        if cmds:
            run.run(cmds)
        elif default_auto:
            run.applications += engine.auto(tree)
        reports[prob.name] = {
            "tree": tree,
            "closed": tree.closed(),
            "refuted": tree.refuted(),
            "applications": run.applications,
            "log": run.log,
        }
    return reports


class _SubtreeView:
    """Restricts pending-goal selection to one subtree while sharing the
    underlying tree."""

    def __init__(self, tree, root):
        self._tree = tree
        self._root = root

    def __getattr__(self, name):
        return getattr(self._tree, name)

    def pending(self):
        out = []

        def walk(gid):
            g = self._tree.nodes[gid]
            kids = self._tree.children[gid]
            if not kids:
                if g.status == engine.PENDING:
                    out.append(g)
            else:
                for k in kids:
                    walk(k)

        walk(self._root)
        return out


# ---------------------------------------------------------------------------
# Proof persistence


def save_proof(lt: LoadedTheory, prob: Problem, tree: ProofTree, path):
    steps = []
    for e in tree.edges:
        steps.append({"rule": e.rule, "goal": e.parent,
                      "params": _ser_params(lt, e.params)})
    data = {
        "format": 1,
        "theory": lt.compiled.name,
        "theory_hash": lt.compiled.source_hash,
        "goal": prob.name,
        "multiclause": render_mc(lt.compiled.sig, prob.mc, lt.infix),
        "steps": steps,
    }
    with open(path, "w") as f:
        json.dump(data, f, indent=1)
    return data


def _ser_params(lt, params):
    out = {}
    for k, v in params.items():
        out[k] = _ser_value(lt, v)
    return out


def _ser_value(lt, v):
    from .kernel import App, Var
    if isinstance(v, (Var, App)):
        return {"t": render_src(v)}
    if isinstance(v, Multiclause):
        return {"mc": render_mc(lt.compiled.sig, v, lt.infix, src=True)}
    if isinstance(v, dict):
        if all(isinstance(k, str) for k in v):
            return {"d": {k: _ser_value(lt, x) for k, x in v.items()}}
        return {"s": [[_ser_value(lt, k), _ser_value(lt, x)]
                      for k, x in sorted(v.items(),
                                         key=lambda kv: repr(kv[0]))]}
    if isinstance(v, (list, tuple)):
        return {"l": [_ser_value(lt, x) for x in v]}
    return {"v": v}


def _deser_value(lt, v):
    tp = lt.parser()
    if "t" in v:
        return tp.parse(v["t"])
    if "mc" in v:
        return lt.parse_mc(v["mc"])
    if "d" in v:
        return {k: _deser_value(lt, x) for k, x in v["d"].items()}
    if "s" in v:
        return {_deser_value(lt, k): _deser_value(lt, x)
                for k, x in v["s"]}
    if "l" in v:
        vals = [_deser_value(lt, x) for x in v["l"]]
        return tuple(vals) if all(not isinstance(x, dict) for x in vals) \
            else vals
    return v["v"]


def load_proof(lt: LoadedTheory, problems, path):
    with open(path) as f:
        data = json.load(f)
    if data.get("theory_hash") != lt.compiled.source_hash:
        raise TheoryMismatch("theory text changed since the proof was saved")
    prob = next((p for p in problems if p.name == data["goal"]), None)
    if prob is None:
        raise ReplayFailure(f"unknown goal {data['goal']!r}")
    tree = ProofTree(lt.compiled, prob.mc, prob.skolem_sig)
    for step in data["steps"]:
        params = {k: _deser_value(lt, v)
                  for k, v in step["params"].items()}
        if "occ" in params:
            occ = params["occ"]
            params["occ"] = (occ[0], occ[1], occ[2], occ[3],
                             tuple(occ[4]))
        try:
            tree.apply(step["rule"], step["goal"], params)
        except (RuleError, KeyError) as e:
            raise ReplayFailure(f"step {step} failed: {e}")
    return tree, prob


# ---------------------------------------------------------------------------
# Session protocol


PROTOCOL_VERSION = 1


class Session:
    def __init__(self, lt: LoadedTheory, problems, script=None):
        self.lt = lt
        self.problems = {p.name: p for p in problems}
        self.trees = {}
        self.events = []
        self.script = script
        for p in problems:
            self.trees[p.name] = ProofTree(lt.compiled, p.mc, p.skolem_sig)

    def handle(self, req):
        rid = req.get("id")
        cmd = req.get("command")
        args = req.get("arguments", {}) or {}
        try:
            result = self._dispatch(cmd, args)
            return {"id": rid, "ok": True, "result": result}
        except Exception as e:  # protocol errors never kill the session
            return {"id": rid, "ok": False, "error": str(e)}

    def _emit(self, problem):
        tree = self.trees[problem]
        self.events.append({"event": "tree-delta", "problem": problem,
                            "version": tree.version,
                            "tree": self._tree_json(problem)})

    def _tree_json(self, problem):
        tree = self.trees[problem]
        sig = self.lt.compiled.sig
        nodes = []
        for gid, g in sorted(tree.nodes.items()):
            hlist = []
            for cl in g.theory.hyps.clauses:
                hlist.append({
                    "text": render_mc(
                        sig, Multiclause(cl.premise,
                                         (cl.delta,) if cl.delta else ((),)),
                        self.lt.infix),
                    "taxonomy": g.theory.hyps.taxonomy(cl),
                })
            kids = tree.children.get(gid, [])
            nodes.append({
                "id": gid,
                "status": "expanded" if kids else g.status,
                "pending": g.status == engine.PENDING and not kids,
                "formula": render_mc(sig, g.mc, self.lt.infix),
                "constants": [c.op for c in g.theory.consts],
                "hypotheses": hlist,
                "children": kids,
            })
        edges = [{"rule": e.rule, "parent": e.parent,
                  "children": list(e.children)} for e in tree.edges]
        return {"root": tree.root, "nodes": nodes, "edges": edges,
                "closed": tree.closed(), "version": tree.version}

    def _dispatch(self, cmd, args):
        if cmd == "hello":
            if args.get("version") not in (None, PROTOCOL_VERSION):
                raise ValueError(
                    f"protocol version {args.get('version')} unsupported; "
                    f"server speaks {PROTOCOL_VERSION}")
            return {"version": PROTOCOL_VERSION,
                    "theory": self.lt.compiled.name,
                    "problems": sorted(self.problems)}
        if cmd == "list-goals":
            out = {}
            for name, tree in self.trees.items():
                out[name] = {"pending": [g.gid for g in tree.pending()],
                             "closed": tree.closed()}
            return out
        if cmd == "show-tree":
            return self._tree_json(args["problem"])
        if cmd == "show-goal":
            tree = self.trees[args["problem"]]
            g = tree.goal(args["goal"])
            sig = self.lt.compiled.sig
            return {"id": g.gid,
                    "formula": render_mc(sig, g.mc, self.lt.infix),
                    "status": g.status,
                    "constants": [c.op for c in g.theory.consts]}
        if cmd == "catalogs":
            ct = self.lt.compiled
            return {"gensets": {n: [render_src(p) for p in g.patterns]
                                for n, g in ct.gensets.items()},
                    "lemmas": {n: render_mc(ct.sig, mc, self.lt.infix)
                               for n, mc in ct.lemmas.items()},
                    "equivalences": sorted(ct.equivalences)}
        if cmd == "applicable-rules":
            return self._applicable(args["problem"], args["goal"])
        if cmd == "apply-rule":
            return self._apply(args)
        if cmd == "auto":
            tree = self.trees[args["problem"]]
            n = engine.auto(tree)
            self._emit(args["problem"])
            return {"applications": n, "closed": tree.closed()}
        if cmd == "undo":
            tree = self.trees[args["problem"]]
            ok = tree.undo()
            self._emit(args["problem"])
            return {"undone": ok}
        if cmd == "save":
            prob = self.problems[args["problem"]]
            save_proof(self.lt, prob, self.trees[args["problem"]],
                       args["path"])
            return {"saved": args["path"]}
        if cmd == "load":
            tree, prob = load_proof(self.lt, list(self.problems.values()),
                                    args["path"])
            self.trees[prob.name] = tree
            self._emit(prob.name)
            return {"loaded": prob.name, "closed": tree.closed()}
        raise ValueError(f"unknown command {cmd!r}")

    def _applicable(self, problem, gid):
        tree = self.trees[problem]
        g = tree.goal(gid)
        out = []
        for rule in engine.SIMPLIFICATION_RULES:
            out.append({"rule": rule, "params": []})
        out.append({"rule": "gsi",
                    "params": ["var", "genset"]})
        out.append({"rule": "ni", "params": ["occ"]})
        out.append({"rule": "cas", "params": ["target", "genset"]})
        out.append({"rule": "va", "params": ["occ"]})
        out.append({"rule": "le", "params": ["lemma"]})
        out.append({"rule": "cut", "params": ["conjunction"]})
        return {"goal": gid, "rules": out,
                "narrowexes": self._narrowexes(g)}

    def _narrowexes(self, g):
        sig = self.lt.compiled.sig
        out = []
        mc = g.mc

        def scan(t, mk, path=()):
            if t.is_app and t.skolem is None and t.args \
                    and t.op in g.theory.base.defined \
                    and all(sig.is_ctor_term(a) for a in t.args):
                out.append({"term": render_src(t), "occ": mk(path)})
            if t.is_app:
                for i, a in enumerate(t.args):
                    scan(a, mk, path + (i,))

        for i, a in enumerate(mc.premise):
            for side in (0, 1):
                scan(a.args[side],
                     lambda p, i=i, s=side: ["prem", i, 0, s, list(p)])
        for l, d in enumerate(mc.concl):
            for k, a in enumerate(d):
                for side in (0, 1):
                    scan(a.args[side],
                         lambda p, k=k, l=l, s=side:
                         ["concl", k, l, s, list(p)])
        return out

    def _apply(self, args):
        problem = args["problem"]
        tree = self.trees[problem]
        params = {k: _deser_value(self.lt, v)
                  for k, v in (args.get("params") or {}).items()}
        if "occ" in params:
            occ = params["occ"]
            params["occ"] = (occ[0], occ[1], occ[2], occ[3], tuple(occ[4]))
        if args["rule"] in ("gsi", "cas"):
            g = tree.goal(args["goal"])
            name = params.pop("name", None)
            if name:
                target = None
                for v in mc_vars(g.mc):
                    if v.name == name:
                        target = v
                target = target or g.theory.const_named(name)
                params["var" if args["rule"] == "gsi" else "target"] = target
        kids = tree.apply(args["rule"], args["goal"], params)
        self._emit(problem)
        return {"children": [k.gid for k in kids],
                "closed": tree.closed()}


def serve_stdio(session, inp=None, outp=None):
    inp = inp or sys.stdin
    outp = outp or sys.stdout
    for line in inp:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
        except json.JSONDecodeError as e:
            outp.write(json.dumps({"id": None, "ok": False,
                                   "error": f"bad json: {e}"}) + "\n")
            outp.flush()
            continue
        resp = session.handle(req)
        outp.write(json.dumps(resp) + "\n")
        for ev in session.events:
            outp.write(json.dumps(ev) + "\n")
        session.events.clear()
        outp.flush()


def serve_socket(lt, problems, script, port):
    class Handler(socketserver.StreamRequestHandler):
        def handle(self):
            session = Session(lt, problems, script)
            try:
                for raw in self.rfile:
                    line = raw.decode().strip()
                    if not line:
                        continue
                    try:
                        req = json.loads(line)
                    except json.JSONDecodeError as e:
                        self._send({"id": None, "ok": False,
                                    "error": f"bad json: {e}"})
                        continue
                    self._send(session.handle(req))
                    for ev in session.events:
                        self._send(ev)
                    session.events.clear()
            except (ConnectionError, OSError):
                return  # client went away; the session dies with it

        def _send(self, obj):
            self.wfile.write((json.dumps(obj) + "\n").encode())
            self.wfile.flush()

    class Server(socketserver.ThreadingTCPServer):
        allow_reuse_address = True
        daemon_threads = True

    return Server(("127.0.0.1", port), Handler)


# ---------------------------------------------------------------------------
# HTTP bridge (serves the explorer bundle and proxies the protocol)


def serve_http(lt, problems, script, port, assets_dir=None):
    from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

    sessions = {}
    lock = threading.Lock()

    def get_session(sid):
        with lock:
            if sid not in sessions:
                sessions[sid] = Session(lt, problems, script)
            return sessions[sid]

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *a):
            pass

        def _json(self, code, obj):
            body = json.dumps(obj).encode()
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            if self.path.startswith("/events"):
                from urllib.parse import parse_qs, urlparse
                q = parse_qs(urlparse(self.path).query)
                sid = q.get("session", ["default"])[0]
                since = int(q.get("since", ["0"])[0])
                sess = get_session(sid)
                evs = [e for e in sess.events_log
                       if e["seq"] > since] if hasattr(sess, "events_log") \
                    else []
                self._json(200, {"events": evs})
                return
            path = self.path.split("?")[0]
            if path == "/":
                path = "/index.html"
            if assets_dir:
                full = os.path.join(assets_dir, path.lstrip("/"))
                if os.path.isfile(full):
                    ctype = ("text/html" if full.endswith(".html")
                             else "application/javascript"
                             if full.endswith(".js") else "text/css"
                             if full.endswith(".css") else "text/plain")
                    with open(full, "rb") as f:
                        body = f.read()
                    self.send_response(200)
                    self.send_header("Content-Type", ctype)
                    self.send_header("Content-Length", str(len(body)))
                    self.end_headers()
                    self.wfile.write(body)
                    return
            self._json(404, {"error": "not found"})

        def do_POST(self):
            if not self.path.startswith("/rpc"):
                self._json(404, {"error": "not found"})
                return
            from urllib.parse import parse_qs, urlparse
            q = parse_qs(urlparse(self.path).query)
            sid = q.get("session", ["default"])[0]
            sess = get_session(sid)
            length = int(self.headers.get("Content-Length", "0"))
            try:
                req = json.loads(self.rfile.read(length) or b"{}")
            except json.JSONDecodeError as e:
                self._json(200, {"id": None, "ok": False,
                                 "error": f"bad json: {e}"})
                return
            resp = sess.handle(req)
            if not hasattr(sess, "events_log"):
                sess.events_log = []
            for ev in sess.events:
                ev = dict(ev)
                ev["seq"] = len(sess.events_log) + 1
                sess.events_log.append(ev)
            sess.events.clear()
            resp["events"] = sess.events_log[-8:]
            self._json(200, resp)

    return ThreadingHTTPServer(("127.0.0.1", port), Handler)


# ---------------------------------------------------------------------------
# CLI


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="prove",
        description="Inductive prover for order-sorted equational theories")
    ap.add_argument("theory")
    ap.add_argument("goals")
    ap.add_argument("--script")
    ap.add_argument("--serve", nargs="?", const=8771, type=int,
                    metavar="PORT")
    ap.add_argument("--socket", type=int, metavar="PORT")
    ap.add_argument("--stdio", action="store_true")
    ap.add_argument("--budget", type=int, default=10000)
    ap.add_argument("--variant-depth", type=int, default=32)
    ap.add_argument("--save", metavar="FILE")
    ap.add_argument("--replay", metavar="FILE")
    ap.add_argument("--assets", metavar="DIR",
                    default=os.path.join(os.path.dirname(__file__), "..",
                                         "..", "frontend", "dist"))
    args = ap.parse_args(argv)
    from .kernel import SignatureError, SortError
    try:
        with open(args.theory) as f:
            lt = parse_theory(f.read(), args.budget, args.variant_depth)
        with open(args.goals) as f:
            problems, goal_vars = parse_goals(lt, f.read())
    except (ParseError, OSError, SortError, SignatureError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3

    script = Script()
    if args.script:
        try:
            with open(args.script) as f:
                script = parse_script(lt, f.read())
        except (ParseError, OSError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 3

    if args.stdio:
        serve_stdio(Session(lt, problems, script))
        return 0
    if args.socket:
        srv = serve_socket(lt, problems, script, args.socket)
        print(f"listening on 127.0.0.1:{args.socket}")
        srv.serve_forever()
        return 0
    if args.serve:
        # register script gensets/equivalences/lemmas so the UI offers them
        for gs in script.gensets:
            if engine.check_generator_set(lt.compiled.sig, lt.compiled.eqth,
                                          gs) is None:
                lt.compiled.gensets[gs.name] = gs
        for spec in script.equivalences:
            install_equivalence(lt, spec)
        for lname, spec in script.lemmas.items():
            ltree = ProofTree(lt.compiled, spec["mc"])
            try:
                ProofRun(lt, ltree, script.extra_vars,
                         script.lemmas).run(spec["commands"])
            except RuleError as e:
                print(f"warning: lemma {lname} not proved: {e}",
                      file=sys.stderr)
                continue
            if ltree.closed():
                lt.compiled.lemmas[lname] = spec["mc"]
        srv = serve_http(lt, problems, script, args.serve,
                         os.path.abspath(args.assets))
        print(f"serving explorer on http://127.0.0.1:{args.serve}/")
        srv.serve_forever()
        return 0

    if args.replay:
        try:
            tree, prob = load_proof(lt, problems, args.replay)
        except (TheoryMismatch, ReplayFailure) as e:
            print(f"error: {e}", file=sys.stderr)
            return 3
        ok = tree.closed()
        print(f"replayed {prob.name}: "
              f"{'closed' if ok else 'still pending'}")
        return 0 if ok else 1

    try:
        reports = run_script(lt, problems, script, goal_vars,
                             default_auto=args.script is None)
    except (RuleError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    refuted = False
    pending = False
    for name, rep in reports.items():
        tree = rep["tree"]
        status = ("refuted" if rep["refuted"] else
                  "closed" if rep["closed"] else "pending")
        print(f"{name}: {status} after {rep['applications']} rule "
              f"applications")
        for g in tree.pending():
            print(f"  pending goal {g.gid}: "
                  f"{render_mc(lt.compiled.sig, g.mc, lt.infix)}")
        refuted |= rep["refuted"]
        pending |= not rep["closed"] and not rep["refuted"]
        if args.save and rep["closed"]:
            prob = next(p for p in problems if p.name == name)
            save_proof(lt, prob, tree, args.save)
            print(f"  proof saved to {args.save}")
    if refuted:
        return 2
    if pending:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
