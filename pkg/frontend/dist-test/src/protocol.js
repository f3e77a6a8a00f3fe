// Line-JSON session protocol client over a pluggable transport.
export const PROTOCOL_VERSION = 1;
export class HttpTransport {
    base;
    session;
    constructor(base, session = "default") {
        this.base = base;
        this.session = session;
    }
    async send(req) {
        const res = await fetch(`${this.base}/rpc?session=${encodeURIComponent(this.session)}`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(req),
        });
        return (await res.json());
    }
}
export class ProtocolError extends Error {
}
// Parameter encoding mirrors the server's tagged value scheme.
export function encodeValue(v) {
    if (Array.isArray(v))
        return { l: v.map(encodeValue) };
    if (v !== null && typeof v === "object") {
        const out = {};
        for (const [k, x] of Object.entries(v))
            out[k] = encodeValue(x);
        return { d: out };
    }
    return { v };
}
export function encodeOcc(occ) {
    const [region, i, l, side, path] = occ;
    return {
        l: [
            { v: region },
            { v: i },
            { v: l },
            { v: side },
            { l: path.map((p) => ({ v: p })) },
        ],
    };
}
export class SessionClient {
    transport;
    nextId = 1;
    onDelta = () => { };
    constructor(transport) {
        this.transport = transport;
    }
    async call(command, args) {
        const req = { id: this.nextId++, command, arguments: args };
        const resp = await this.transport.send(req);
        for (const ev of resp.events ?? [])
            this.onDelta(ev);
        if (!resp.ok)
            throw new ProtocolError(resp.error ?? "request failed");
        return resp.result;
    }
    async hello() {
        const result = await this.call("hello", { version: PROTOCOL_VERSION });
        if (result.version !== PROTOCOL_VERSION) {
            throw new ProtocolError(`server speaks protocol ${result.version}, client needs ${PROTOCOL_VERSION}`);
        }
        return result;
    }
    showTree(problem) {
        return this.call("show-tree", { problem });
    }
    listGoals() {
        return this.call("list-goals");
    }
    catalogs() {
        return this.call("catalogs");
    }
    applicableRules(problem, goal) {
        return this.call("applicable-rules", { problem, goal });
    }
    applyRule(problem, goal, rule, params = {}) {
        return this.call("apply-rule", { problem, goal, rule, params });
    }
    auto(problem) {
        return this.call("auto", { problem });
    }
    undo(problem) {
        return this.call("undo", { problem });
    }
    save(problem, path) {
        return this.call("save", { problem, path });
    }
}
