import json
import subprocess
import sys

import pytest

from conftest import fixture_path, read_fixture
from mcprover import engine, shell
from mcprover.shell import (ParseError, ReplayFailure, Session,
                            TheoryMismatch, load_proof, parse_goals,
                            parse_script, parse_theory, run_script,
                            save_proof)


def test_parse_natural_loads(natural):
    ct = natural.compiled
    assert ct.fvp is not None
    assert set(ct.fvp.ops) == {"0", "1", "+", ">", "true", "false"}
    assert ct.suff_complete["*"] is True
    assert ct.suff_complete[">"] is False


def test_parse_rejects_assoc_only():
    with pytest.raises(ParseError):
        parse_theory("""theory T
  sorts A
  op c : -> A [ctor prec 0]
  op _f_ : A A -> A [assoc prec 1]
endtheory
""")


def test_parse_rejects_duplicate_prec():
    with pytest.raises(ParseError):
        parse_theory("""theory T
  sorts A
  op c : -> A [ctor prec 0]
  op d : -> A [ctor prec 0]
endtheory
""")


def test_parse_rejects_missing_prec():
    with pytest.raises(ParseError):
        parse_theory("""theory T
  sorts A
  op c : -> A [ctor prec 0]
  op f : A -> A [ctor]
endtheory
""")


def test_parse_rejects_non_fvp_fragment():
    text = """theory T
  sorts Nat
  op 0 : -> Nat [ctor prec 0]
  op s : Nat -> Nat [ctor prec 1]
  op _+_ : Nat Nat -> Nat [prec 5]
  vars X Y : Nat
  eq X + 0 = X [variant]
  eq X + s(Y) = s(X + Y) [variant]
  fvp ops 0 s _+_
endtheory
"""
    with pytest.raises(ParseError):
        parse_theory(text, variant_depth=8)


def test_theory_roundtrip_reparse(natural):
    # parsing the same text twice yields the same rule set and hash
    lt2 = parse_theory(read_fixture("natural.th"))
    assert lt2.compiled.source_hash == natural.compiled.source_hash
    assert len(lt2.compiled.eqth.term_rules) == \
        len(natural.compiled.eqth.term_rules)


def test_render_parse_roundtrip(natural):
    mc = natural.parse_mc("X * Z' = Y * Z' -> X = Y",
                          {"Z'": natural.compiled.sig.var("Z'", "NzNat")})
    text = shell.render_mc(natural.compiled.sig, mc, natural.infix)
    again = natural.parse_mc(text,
                             {"Z'": natural.compiled.sig.var("Z'", "NzNat")})
    assert mc == again


def run_cli(args):
    proc = subprocess.run(
        [sys.executable, "-m", "mcprover"] + args,
        capture_output=True, text=True, timeout=300)
    return proc


def test_cli_exit_codes(tmp_path):
    out = run_cli([fixture_path("lapp.th"), fixture_path("lapp.goals"),
                   "--script", fixture_path("lapp.script")])
    assert out.returncode == 0, out.stderr
    # no script leaves the root pending: exit code 1
    out = run_cli([fixture_path("lapp.th"), fixture_path("lapp.goals")])
    assert out.returncode == 1
    # refuted goal: exit code 2
    goals = tmp_path / "bad.goals"
    goals.write_text("goals for LAPP\n  goal bad : top -> nil = e1 . nil\n")
    out = run_cli([fixture_path("lapp.th"), str(goals)])
    assert out.returncode == 2
    # parse error: exit code 3
    out = run_cli([fixture_path("lapp.th"), fixture_path("natural.goals")])
    assert out.returncode == 3


def test_save_load_roundtrip(tmp_path, lrev):
    script = parse_script(lrev, read_fixture("lrev.script"))
    problems, gvars = parse_goals(lrev, read_fixture("lrev.goals"))
    reports = run_script(lrev, problems, script, gvars)
    tree = reports["revlemma"]["tree"]
    assert reports["revlemma"]["closed"]
    path = tmp_path / "rev.proof"
    save_proof(lrev, problems[0], tree, str(path))
    tree2, prob = load_proof(lrev, problems, str(path))
    assert tree2.closed()
    assert len(tree2.edges) == len(tree.edges)


def test_load_proof_tampered(tmp_path, lrev):
    script = parse_script(lrev, read_fixture("lrev.script"))
    problems, gvars = parse_goals(lrev, read_fixture("lrev.goals"))
    reports = run_script(lrev, problems, script, gvars)
    path = tmp_path / "rev.proof"
    save_proof(lrev, problems[0], reports["revlemma"]["tree"], str(path))
    data = json.loads(path.read_text())
    data["steps"][0]["rule"] = "icc"
    path.write_text(json.dumps(data))
    with pytest.raises(ReplayFailure):
        load_proof(lrev, problems, str(path))


def test_load_proof_hash_mismatch(tmp_path, lrev, lapp):
    script = parse_script(lrev, read_fixture("lrev.script"))
    problems, gvars = parse_goals(lrev, read_fixture("lrev.goals"))
    reports = run_script(lrev, problems, script, gvars)
    path = tmp_path / "rev.proof"
    save_proof(lrev, problems[0], reports["revlemma"]["tree"], str(path))
    with pytest.raises(TheoryMismatch):
        load_proof(lapp, problems, str(path))


def test_session_protocol_basic(lrev):
    problems, _ = parse_goals(lrev, read_fixture("lrev.goals"))
    sess = Session(lrev, problems)
    hello = sess.handle({"id": 1, "command": "hello",
                         "arguments": {"version": 1}})
    assert hello["ok"] and hello["result"]["version"] == 1
    bad = sess.handle({"id": 2, "command": "nope"})
    assert not bad["ok"]
    tree = sess.handle({"id": 3, "command": "show-tree",
                        "arguments": {"problem": "revlemma"}})
    assert tree["ok"] and tree["result"]["root"] == 1
    rules = sess.handle({"id": 4, "command": "applicable-rules",
                         "arguments": {"problem": "revlemma", "goal": 1}})
    assert rules["ok"]
    narrowexes = rules["result"]["narrowexes"]
    snocs = [n for n in narrowexes if n["term"].startswith("snoc")]
    assert snocs
    applied = sess.handle({"id": 5, "command": "apply-rule",
                           "arguments": {"problem": "revlemma", "goal": 1,
                                         "rule": "ni",
                                         "params": {"occ": {
                                             "l": [{"v": x} for x in
                                                   snocs[0]["occ"][:4]]
                                             + [{"l": [{"v": i} for i in
                                                       snocs[0]["occ"][4]]}]
                                         }}}})
    assert applied["ok"], applied
    auto = sess.handle({"id": 6, "command": "auto",
                        "arguments": {"problem": "revlemma"}})
    assert auto["ok"] and auto["result"]["closed"]
    undo = sess.handle({"id": 7, "command": "undo",
                        "arguments": {"problem": "revlemma"}})
    assert undo["ok"]


def test_protocol_fuzz_never_crashes(lrev):
    problems, _ = parse_goals(lrev, read_fixture("lrev.goals"))
    sess = Session(lrev, problems)
    junk = [
        {"id": 1},
        {"command": "apply-rule"},
        {"id": 2, "command": "apply-rule", "arguments": {}},
        {"id": 3, "command": "apply-rule",
         "arguments": {"problem": "revlemma", "goal": 99, "rule": "eps"}},
        {"id": 4, "command": "show-goal",
         "arguments": {"problem": "nope", "goal": 1}},
        {"id": 5, "command": "apply-rule",
         "arguments": {"problem": "revlemma", "goal": 1, "rule": "gsi",
                       "params": {"name": {"v": "zzz"},
                                  "genset": {"v": "none"}}}},
    ]
    for req in junk:
        resp = sess.handle(req)
        assert resp.get("ok") is not None
    # the tree survives untouched
    assert sess.trees["revlemma"].pending()


def test_stdio_service_malformed_lines(lrev):
    import io
    problems, _ = parse_goals(lrev, read_fixture("lrev.goals"))
    sess = Session(lrev, problems)
    inp = io.StringIO('{"id":1,"command":"hello"}\nnot json at all\n'
                      '{"id":2,"command":"list-goals"}\n')
    outp = io.StringIO()
    shell.serve_stdio(sess, inp, outp)
    lines = [json.loads(l) for l in outp.getvalue().splitlines()]
    assert lines[0]["ok"]
    assert not lines[1]["ok"]
    assert lines[2]["ok"]


def test_socket_transport(lrev):
    import socket
    import threading
    problems, _ = parse_goals(lrev, read_fixture("lrev.goals"))
    srv = shell.serve_socket(lrev, problems, None, 8796)
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()
    try:
        with socket.create_connection(("127.0.0.1", 8796), timeout=10) as s:
            f = s.makefile("rw")
            f.write(json.dumps({"id": 1, "command": "hello"}) + "\n")
            f.flush()
            resp = json.loads(f.readline())
            assert resp["ok"] and resp["result"]["theory"] == "LREV"
            f.write("garbage\n")
            f.flush()
            resp = json.loads(f.readline())
            assert not resp["ok"]
            f.write(json.dumps({"id": 2, "command": "auto",
                                "arguments": {"problem": "revlemma"}}) + "\n")
            f.flush()
            resp = json.loads(f.readline())
            assert resp["ok"]
            event = json.loads(f.readline())
            assert event["event"] == "tree-delta"
    finally:
        srv.shutdown()


def test_hello_version_mismatch(lrev):
    problems, _ = parse_goals(lrev, read_fixture("lrev.goals"))
    sess = Session(lrev, problems)
    resp = sess.handle({"id": 1, "command": "hello",
                        "arguments": {"version": 99}})
    assert not resp["ok"] and "version" in resp["error"]


def test_empty_script_leaves_pending_root(lapp):
    problems, gvars = parse_goals(lapp, read_fixture("lapp.goals"))
    reports = run_script(lapp, problems, shell.Script(), gvars)
    tree = reports["appassoc"]["tree"]
    assert len(tree.nodes) == 1
    assert [g.gid for g in tree.pending()] == [tree.root]
    assert reports["appassoc"]["applications"] == 0


def test_eqh_script_command(pal):
    # user-guided equality step driven from a script: rewrite with the
    # goal's conditional hypothesis at a chosen occurrence
    lt = pal
    sig = lt.compiled.sig
    eqth = lt.compiled.eqth
    from mcprover.engine import IndTheory, ProofTree
    from mcprover.hyps import mk_clause
    pb = sig.skolem_const("P#71", "List", "P")
    tru = sig.app("true", [])
    mc = shell.mk_multiclause(
        [eqth.eq(sig.app("pal", [pb]), tru)],
        [[eqth.eq(sig.app("rev", [pb]), pb)]])
    tree = ProofTree(lt.compiled, mc)
    root = tree.goal(tree.root)
    hyp = mk_clause([eqth.eq(sig.app("pal", [pb]), tru)],
                    [eqth.eq(sig.app("rev", [pb]), pb)], "induction")
    fact = mk_clause([], [eqth.eq(sig.app("pal", [pb]), tru)], "assumption")
    root.theory = IndTheory(lt.compiled, (pb,)).extend([], [hyp, fact])
    idx = next(i for i, c in enumerate(root.theory.hyps.clauses)
               if c.premise)
    run = shell.ProofRun(lt, tree)
    run.command(f"eqh {idx} rev")
    g = tree.pending()[0]
    # rev(P#) in the conclusion was replaced by P# using the hypothesis,
    # whose pal(P#) = true condition is discharged by the goal engine
    assert any(a.args[0] is pb and a.args[1] is pb
               for d in g.mc.concl for a in d)
    run.command("eps")
    assert tree.closed()


def test_session_gsi_by_name(nf2):
    # the explorer applies induction by variable name and generator set
    from mcprover.engine import GeneratorSet, check_generator_set
    sig = nf2.compiled.sig
    k = sig.var("K", "Nat")
    gs = GeneratorSet("ui3", "Nat",
                      (sig.app("0", []), sig.app("s", [sig.app("0", [])]),
                       sig.app("s", [sig.app("s", [k])])))
    assert check_generator_set(sig, nf2.compiled.eqth, gs, 4) is None
    nf2.compiled.gensets["ui3"] = gs
    problems, _ = parse_goals(nf2, read_fixture("nf2.goals"))
    sess = Session(nf2, problems)
    cats = sess.handle({"id": 1, "command": "catalogs"})
    assert "ui3" in cats["result"]["gensets"]
    resp = sess.handle({"id": 2, "command": "apply-rule",
                        "arguments": {"problem": "addcomm", "goal": 1,
                                      "rule": "gsi",
                                      "params": {"name": {"v": "X"},
                                                 "genset": {"v": "ui3"}}}})
    assert resp["ok"], resp
    assert len(resp["result"]["children"]) == 3


def test_script_existential_witness(np_theory):
    goals_text = ("goals for NP\n"
                  "  goal exgoal : exists W : Nat . "
                  "top -> s(W) = s(s(0))\n")
    problems, gvars = parse_goals(np_theory, goals_text)
    script_text = ("script for NP\n"
                   "  prove exgoal\n"
                   "    witness W = s(0)\n"
                   "    eps\n"
                   "  endproof\n")
    script = parse_script(np_theory, script_text)
    reports = run_script(np_theory, problems, script, gvars)
    assert reports["exgoal"]["closed"]


def test_socket_sessions_are_isolated(lrev):
    import socket
    import threading
    problems, _ = parse_goals(lrev, read_fixture("lrev.goals"))
    srv = shell.serve_socket(lrev, problems, None, 8795)
    t = threading.Thread(target=srv.serve_forever, daemon=True)
    t.start()

    def rpc(f, obj):
        f.write(json.dumps(obj) + "\n")
        f.flush()
        while True:
            line = json.loads(f.readline())
            if "event" not in line:
                return line

    try:
        with socket.create_connection(("127.0.0.1", 8795), timeout=10) as a, \
                socket.create_connection(("127.0.0.1", 8795), timeout=10) as b:
            fa, fb = a.makefile("rw"), b.makefile("rw")
            rpc(fa, {"id": 1, "command": "hello"})
            rpc(fb, {"id": 1, "command": "hello"})
            out = rpc(fa, {"id": 2, "command": "auto",
                           "arguments": {"problem": "revlemma"}})
            assert out["result"]["closed"] is False or True  # ran
            tree_b = rpc(fb, {"id": 2, "command": "show-tree",
                              "arguments": {"problem": "revlemma"}})
            # session B still has just the untouched root
            assert len(tree_b["result"]["nodes"]) == 1
    finally:
        srv.shutdown()


def test_revapp_needs_its_lemmas(lapp):
    # the stacked-lemma proof closes; without the enrichment steps the
    # same induction stays open
    script = parse_script(lapp, read_fixture("lapp.script"))
    problems, gvars = parse_goals(lapp, read_fixture("lapp.goals"))
    reports = run_script(lapp, problems, script, gvars)
    assert reports["revapp"]["closed"]
    assert reports["revapp"]["applications"] == 5

    bare = shell.Script(gensets=list(script.gensets),
                        proofs={"revapp": [(1, "gsi L listGen"),
                                           (2, "auto")]},
                        extra_vars=dict(script.extra_vars))
    reports2 = run_script(lapp, problems, bare, gvars)
    assert not reports2["revapp"]["closed"]


def test_save_replay_with_eqh_step(tmp_path, pal):
    # a proof containing the user-guided equality step (whose parameters
    # carry terms and a substitution) replays from its file
    lt = pal
    sig = lt.compiled.sig
    eqth = lt.compiled.eqth
    from mcprover.engine import IndTheory, ProofTree
    from mcprover.hyps import mk_clause
    goals_text = ("goals for PAL\n  var L : List\n"
                  "  goal eqdemo : pal(L) = true -> rev(L) = rev(L)\n")
    problems, gvars = parse_goals(lt, goals_text)
    tree = ProofTree(lt.compiled, problems[0].mc)
    g = tree.goal(tree.root)
    lvar = next(iter(engine.mc_vars(g.mc)))
    x = sig.var("X", "Elt")
    occ = [o for o in engine.mc_subterm_occurrences(
        g.mc, sig.app("pal", [lvar])) if o[0] == "prem"][0]
    tree.apply("eq", tree.root, {
        "occ": occ,
        "condition": [(sig.app("eqE", [sig.app("a", []), sig.app("a", [])]),
                       sig.app("true", []))],
        "lhs": sig.app("pal", [lvar]),
        "rhs": sig.app("pal", [lvar]),
        "subst": {x: sig.app("a", [])},
    })
    tree.apply("eps", tree.children[tree.root][0], {})
    assert tree.closed()
    path = tmp_path / "eq.proof"
    save_proof(lt, problems[0], tree, str(path))
    tree2, _ = load_proof(lt, problems, str(path))
    assert tree2.closed()
