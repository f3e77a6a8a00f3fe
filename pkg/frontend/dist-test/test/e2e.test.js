// End-to-end: spawn the prover's serve mode, drive the reverse-lemma
// proof exactly as the UI would (click the narrowing focus, run auto),
// save the proof file, and have the prover replay-verify it.
import assert from "node:assert/strict";
import { after, before, test } from "node:test";
import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { HttpTransport, SessionClient, encodeOcc } from "../src/protocol.js";
import { applySnapshot, initialState } from "../src/model.js";
// compiled test path: frontend/dist-test/test/e2e.test.js
const ROOT = resolve(import.meta.dirname ?? ".", "..", "..", "..");
const PORT = 8799;
const BASE = `http://127.0.0.1:${PORT}`;
let server;
before(async () => {
    server = spawn("python3", [
        "-m",
        "mcprover",
        "tests/fixtures/lrev.th",
        "tests/fixtures/lrev.goals",
        "--serve",
        String(PORT),
    ], { cwd: ROOT, stdio: ["ignore", "pipe", "pipe"] });
    for (let i = 0; i < 50; i++) {
        try {
            const res = await fetch(`${BASE}/rpc`, {
                method: "POST",
                body: JSON.stringify({ id: 0, command: "hello" }),
            });
            if (res.ok)
                return;
        }
        catch {
            await new Promise((r) => setTimeout(r, 200));
        }
    }
    throw new Error("prover service did not come up");
});
after(() => {
    server.kill();
});
test("explorer drives the reverse lemma to a closed tree", async () => {
    const client = new SessionClient(new HttpTransport(BASE, "e2e"));
    let view = initialState();
    client.onDelta = (d) => {
        view = applySnapshot(view, d.problem, d.tree);
    };
    const hello = await client.hello();
    assert.deepEqual(hello.problems, ["revlemma"]);
    const snap = await client.showTree("revlemma");
    view = applySnapshot(view, "revlemma", snap);
    assert.equal(view.nodes.size, 1);
    const root = view.root;
    // the server lists clickable narrowing candidates; the UI click applies
    // narrowing induction at that focus
    const info = await client.applicableRules("revlemma", root);
    const snoc = info.narrowexes.find((n) => n.term.startsWith("snoc"));
    assert.ok(snoc, "expected the snoc(Q, Y) focus in the candidate list");
    const applied = await client.applyRule("revlemma", root, "ni", {
        occ: encodeOcc(snoc.occ),
    });
    assert.equal(applied.children.length, 2);
    assert.ok(view.version > 0, "delta stream updated the view");
    const out = await client.auto("revlemma");
    assert.equal(out.closed, true);
    assert.equal(view.closed, true);
    const badges = [...view.nodes.values()].filter((n) => n.children.length === 0);
    assert.ok(badges.every((n) => !n.pending));
    // server-side replay of the saved proof file verifies
    const dir = mkdtempSync(join(tmpdir(), "explorer-"));
    const path = join(dir, "rev.proof");
    await client.save("revlemma", path);
    const replay = spawnSync("python3", [
        "-m",
        "mcprover",
        "tests/fixtures/lrev.th",
        "tests/fixtures/lrev.goals",
        "--replay",
        path,
    ], { cwd: ROOT, encoding: "utf8" });
    assert.equal(replay.status, 0, replay.stderr);
    assert.match(replay.stdout, /closed/);
});
test("undo rolls the tree back through the delta stream", async () => {
    const client = new SessionClient(new HttpTransport(BASE, "undo-check"));
    let view = initialState();
    client.onDelta = (d) => {
        view = applySnapshot(view, d.problem, d.tree);
    };
    await client.hello();
    view = applySnapshot(view, "revlemma", await client.showTree("revlemma"));
    const info = await client.applicableRules("revlemma", view.root);
    await client.applyRule("revlemma", view.root, "ni", {
        occ: encodeOcc(info.narrowexes[0].occ),
    });
    assert.ok(view.nodes.size > 1);
    await client.undo("revlemma");
    assert.equal(view.nodes.size, 1);
});
