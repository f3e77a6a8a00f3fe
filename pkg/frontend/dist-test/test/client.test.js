import assert from "node:assert/strict";
import { test } from "node:test";
import { PROTOCOL_VERSION, ProtocolError, SessionClient, encodeOcc, encodeValue, } from "../src/protocol.js";
class MockTransport {
    sent = [];
    queue = [];
    async send(req) {
        this.sent.push(req);
        const resp = this.queue.shift();
        if (!resp)
            throw new Error("mock transport exhausted");
        return { ...resp, id: req.id };
    }
}
test("hello checks the protocol version", async () => {
    const t = new MockTransport();
    t.queue.push({ id: 0, ok: true, result: { version: PROTOCOL_VERSION, theory: "T", problems: ["g"] } });
    const client = new SessionClient(t);
    const out = await client.hello();
    assert.equal(out.theory, "T");
    t.queue.push({ id: 0, ok: true, result: { version: 99 } });
    await assert.rejects(() => client.hello(), ProtocolError);
});
test("every action is exactly one request", async () => {
    const t = new MockTransport();
    const client = new SessionClient(t);
    t.queue.push({ id: 0, ok: true, result: { children: [2], closed: false } });
    await client.applyRule("g", 1, "eps");
    t.queue.push({ id: 0, ok: true, result: { applications: 2, closed: true } });
    await client.auto("g");
    assert.equal(t.sent.length, 2);
    assert.deepEqual(t.sent.map((r) => r.command), ["apply-rule", "auto"]);
    // ids are fresh and increasing
    assert.ok(t.sent[0].id < t.sent[1].id);
});
test("errors become exceptions, deltas reach the handler", async () => {
    const t = new MockTransport();
    const client = new SessionClient(t);
    const deltas = [];
    client.onDelta = (d) => deltas.push(d);
    const delta = {
        event: "tree-delta",
        problem: "g",
        version: 1,
        tree: { root: 1, nodes: [], edges: [], closed: false, version: 1 },
    };
    t.queue.push({ id: 0, ok: false, error: "no", events: [delta] });
    await assert.rejects(() => client.applyRule("g", 1, "cvul"), ProtocolError);
    assert.equal(deltas.length, 1);
});
test("occurrence encoding matches the server's tagged scheme", () => {
    const enc = encodeOcc(["concl", 0, 0, 1, [0, 2]]);
    assert.deepEqual(enc, {
        l: [
            { v: "concl" },
            { v: 0 },
            { v: 0 },
            { v: 1 },
            { l: [{ v: 0 }, { v: 2 }] },
        ],
    });
    assert.deepEqual(encodeValue("x"), { v: "x" });
    assert.deepEqual(encodeValue({ mc: "a = b" }), { d: { mc: { v: "a = b" } } });
});
