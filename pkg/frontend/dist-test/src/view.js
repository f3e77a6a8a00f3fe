// DOM rendering. Every user action becomes exactly one protocol request;
// the tree is re-rendered only from server deltas.
import { encodeOcc, encodeValue, } from "./protocol.js";
import { applySnapshot, pendingCount, select, treeRows, } from "./model.js";
const SIMPLIFICATION = [
    "eps",
    "cvul",
    "cvufr",
    "subl",
    "subr",
    "cs",
    "icc",
    "varsat",
];
export class Explorer {
    client;
    rootEl;
    banner;
    state;
    narrowexes = [];
    gensets = {};
    lemmas = {};
    constructor(client, rootEl, banner) {
        this.client = client;
        this.rootEl = rootEl;
        this.banner = banner;
        this.state = {
            problem: null,
            version: -1,
            root: 0,
            nodes: new Map(),
            edges: new Map(),
            closed: false,
            selected: null,
        };
        client.onDelta = (delta) => {
            this.state = applySnapshot(this.state, delta.problem, delta.tree);
            void this.refreshSelection();
        };
    }
    async open(problem) {
        const snap = await this.client.showTree(problem);
        this.state = applySnapshot(this.state, problem, snap);
        const cats = await this.client.catalogs();
        this.gensets = cats.gensets;
        this.lemmas = cats.lemmas;
        await this.refreshSelection();
    }
    async refreshSelection() {
        const { problem, selected } = this.state;
        this.narrowexes = [];
        if (problem && selected !== null) {
            const node = this.state.nodes.get(selected);
            if (node && node.pending && node.children.length === 0) {
                try {
                    const info = await this.client.applicableRules(problem, selected);
                    this.narrowexes = info.narrowexes;
                }
                catch {
                    this.narrowexes = [];
                }
            }
        }
        this.render();
    }
    async apply(rule, params = {}) {
        const { problem, selected } = this.state;
        if (!problem || selected === null)
            return;
        const node = this.state.nodes.get(selected);
        if (node && (!node.pending || node.children.length > 0)) {
            this.banner(`goal ${selected} is not pending`, "info");
            return;
        }
        try {
            await this.client.applyRule(problem, selected, rule, params);
            this.banner(`${rule} applied`, "info");
        }
        catch (e) {
            this.banner(`${rule}: ${e.message}`, "error");
        }
        await this.refreshSelection();
    }
    async auto() {
        if (!this.state.problem)
            return;
        try {
            const out = await this.client.auto(this.state.problem);
            this.banner(`auto: ${out.applications} applications${out.closed ? ", closed" : ""}`, "info");
        }
        catch (e) {
            this.banner(`auto: ${e.message}`, "error");
        }
        await this.refreshSelection();
    }
    async undo() {
        if (!this.state.problem)
            return;
        await this.client.undo(this.state.problem);
        await this.refreshSelection();
    }
    render() {
        const el = this.rootEl;
        el.textContent = "";
        el.appendChild(this.renderStatus());
        const split = div("split");
        split.appendChild(this.renderTree());
        split.appendChild(this.renderInspector());
        el.appendChild(split);
    }
    renderStatus() {
        const bar = div("status");
        const state = this.state;
        const label = state.closed
            ? "closed"
            : `${pendingCount(state)} pending goal(s)`;
        bar.appendChild(span(`problem ${state.problem ?? "?"} · version ${state.version} · ${label}`, state.closed ? "ok" : "busy"));
        const autoBtn = button("auto", () => void this.auto());
        const undoBtn = button("undo", () => void this.undo());
        bar.appendChild(autoBtn);
        bar.appendChild(undoBtn);
        return bar;
    }
    renderTree() {
        const pane = div("tree");
        for (const row of treeRows(this.state)) {
            const line = div("goal-row");
            line.style.paddingLeft = `${row.depth * 18}px`;
            if (row.id === this.state.selected)
                line.classList.add("selected");
            const status = row.node.children.length > 0
                ? "expanded"
                : row.node.pending
                    ? "pending"
                    : row.node.status;
            line.appendChild(span(row.rule ? `${row.rule} ⊢` : "⊢", "rule-label"));
            line.appendChild(span(`#${row.id}`, `badge ${status}`));
            line.appendChild(renderFormula(row.node.formula, row.node.constants));
            line.addEventListener("click", () => {
                this.state = select(this.state, row.id);
                void this.refreshSelection();
            });
            pane.appendChild(line);
        }
        return pane;
    }
    renderInspector() {
        const pane = div("inspector");
        const sel = this.state.selected;
        const node = sel !== null ? this.state.nodes.get(sel) : undefined;
        if (!node)
            return pane;
        pane.appendChild(heading(`goal #${node.id}`));
        pane.appendChild(renderFormula(node.formula, node.constants));
        if (node.constants.length) {
            pane.appendChild(heading("fresh constants"));
            pane.appendChild(span(node.constants.join(", "), "constants"));
        }
        pane.appendChild(heading("hypotheses"));
        if (!node.hypotheses.length)
            pane.appendChild(span("none", "muted"));
        for (const h of node.hypotheses) {
            const row = div("hyp");
            row.appendChild(span(h.taxonomy, `badge tax-${h.taxonomy}`));
            row.appendChild(span(h.text, "hyp-text"));
            pane.appendChild(row);
        }
        pane.appendChild(heading("simplification rules"));
        const rules = div("rules");
        for (const rule of SIMPLIFICATION) {
            rules.appendChild(button(rule, () => void this.apply(rule)));
        }
        pane.appendChild(rules);
        pane.appendChild(heading("narrowing (click a focus)"));
        if (!this.narrowexes.length) {
            pane.appendChild(span("no eligible focus here", "muted"));
        }
        for (const nx of this.narrowexes) {
            const row = div("narrowex");
            const term = span(nx.term, "term clickable");
            term.title = "apply narrowing induction at this focus";
            term.addEventListener("click", () => void this.apply("ni", { occ: encodeOcc(nx.occ) }));
            row.appendChild(term);
            const nsBtn = button("ns", () => void this.apply("ns", { occ: encodeOcc(nx.occ) }));
            row.appendChild(nsBtn);
            pane.appendChild(row);
        }
        pane.appendChild(heading("induction"));
        const controls = div("controls");
        const varBox = input("variable");
        const gsSel = selectBox(Object.keys(this.gensets));
        controls.appendChild(varBox);
        controls.appendChild(gsSel);
        controls.appendChild(button("gsi", () => void this.apply("gsi", {
            name: encodeValue(varBox.value),
            genset: encodeValue(gsSel.value),
        })));
        controls.appendChild(button("cas", () => void this.apply("cas", {
            name: encodeValue(varBox.value),
            genset: encodeValue(gsSel.value),
        })));
        pane.appendChild(controls);
        const lemmaSel = selectBox(Object.keys(this.lemmas));
        const lemmaRow = div("controls");
        lemmaRow.appendChild(lemmaSel);
        lemmaRow.appendChild(button("le", () => {
            const mc = this.lemmas[lemmaSel.value];
            if (mc) {
                void this.apply("le", {
                    lemma: { mc },
                    name: encodeValue(lemmaSel.value),
                });
            }
        }));
        pane.appendChild(lemmaRow);
        return pane;
    }
}
// Skolem constants render with an overline and their origin name in the
// tooltip; AC arguments arrive already in canonical order.
export function renderFormula(formula, constants) {
    const out = span("", "formula");
    out.title =
        "arguments of commutative/associative operators are shown in canonical order";
    const pattern = /[A-Za-z0-9'%]+#[0-9]+/g;
    let last = 0;
    for (const m of formula.matchAll(pattern)) {
        if (m.index > last) {
            out.appendChild(document.createTextNode(formula.slice(last, m.index)));
        }
        const c = span(m[0], "skolem");
        c.title = `fresh constant for ${m[0].split("#")[0]}`;
        out.appendChild(c);
        last = m.index + m[0].length;
    }
    if (last < formula.length) {
        out.appendChild(document.createTextNode(formula.slice(last)));
    }
    return out;
}
function div(cls) {
    const el = document.createElement("div");
    el.className = cls;
    return el;
}
function span(text, cls) {
    const el = document.createElement("span");
    el.className = cls;
    el.textContent = text;
    return el;
}
function heading(text) {
    const el = document.createElement("h3");
    el.textContent = text;
    return el;
}
function button(label, onClick) {
    const el = document.createElement("button");
    el.textContent = label;
    el.addEventListener("click", onClick);
    return el;
}
function input(placeholder) {
    const el = document.createElement("input");
    el.placeholder = placeholder;
    return el;
}
function selectBox(options) {
    const el = document.createElement("select");
    for (const opt of options) {
        const o = document.createElement("option");
        o.value = opt;
        o.textContent = opt;
        el.appendChild(o);
    }
    return el;
}
