import assert from "node:assert/strict";
import { test } from "node:test";
// Minimal DOM stand-in: just enough for the formula renderer.
class FakeNode {
    tag;
    children = [];
    className = "";
    title = "";
    text = "";
    constructor(tag) {
        this.tag = tag;
    }
    appendChild(n) {
        this.children.push(n);
        return n;
    }
    set textContent(v) {
        this.text = v;
        this.children = [];
    }
    get textContent() {
        return this.text + this.children.map((c) => c.textContent).join("");
    }
    addEventListener() { }
}
globalThis.document = {
    createElement: (tag) => new FakeNode(tag),
    createTextNode: (text) => {
        const n = new FakeNode("#text");
        n.text = text;
        return n;
    },
};
const { renderFormula } = await import("../src/view.js");
test("fresh constants render as marked spans with their origin", () => {
    const el = renderFormula("rev(snoc(L#1, y#3)) = y#3 . rev(L#1)", ["L#1", "y#3"]);
    const skolems = el.children.filter((c) => c.className === "skolem");
    assert.equal(skolems.length, 4);
    assert.deepEqual([...new Set(skolems.map((s) => s.textContent))].sort(), ["L#1", "y#3"]);
    assert.ok(skolems[0].title.includes("L"));
    // the surrounding text is preserved verbatim
    assert.equal(el.textContent, "rev(snoc(L#1, y#3)) = y#3 . rev(L#1)");
});
test("formulas without constants render as plain text", () => {
    const el = renderFormula("X + Y = Y + X", []);
    assert.equal(el.textContent, "X + Y = Y + X");
    assert.equal(el.children.filter((c) => c.className === "skolem").length, 0);
});
