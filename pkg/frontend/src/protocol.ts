// Line-JSON session protocol client over a pluggable transport.

export const PROTOCOL_VERSION = 1;

export interface Request {
  id: number;
  command: string;
  arguments?: Record<string, unknown>;
}

export interface Response {
  id: number | null;
  ok: boolean;
  result?: any;
  error?: string;
  events?: TreeDelta[];
}

export interface HypothesisView {
  text: string;
  taxonomy: string;
}

export interface GoalNode {
  id: number;
  pending: boolean;
  status: string;
  formula: string;
  constants: string[];
  hypotheses: HypothesisView[];
  children: number[];
}

export interface TreeSnapshot {
  root: number;
  nodes: GoalNode[];
  edges: { rule: string; parent: number; children: number[] }[];
  closed: boolean;
  version: number;
}

export interface TreeDelta {
  event: "tree-delta";
  problem: string;
  version: number;
  tree: TreeSnapshot;
  seq?: number;
}

export interface Narrowex {
  term: string;
  occ: [string, number, number, number, number[]];
}

export interface Transport {
  send(req: Request): Promise<Response>;
}

export class HttpTransport implements Transport {
  constructor(private base: string, private session = "default") {}

  async send(req: Request): Promise<Response> {
    const res = await fetch(
      `${this.base}/rpc?session=${encodeURIComponent(this.session)}`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(req),
      },
    );
    return (await res.json()) as Response;
  }
}

export class ProtocolError extends Error {}

// Parameter encoding mirrors the server's tagged value scheme.
export function encodeValue(v: unknown): any {
  if (Array.isArray(v)) return { l: v.map(encodeValue) };
  if (v !== null && typeof v === "object") {
    const out: Record<string, any> = {};
    for (const [k, x] of Object.entries(v as object)) out[k] = encodeValue(x);
    return { d: out };
  }
  return { v };
}

export function encodeOcc(occ: Narrowex["occ"]): any {
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
  private nextId = 1;
  onDelta: (delta: TreeDelta) => void = () => {};

  constructor(private transport: Transport) {}

  private async call(command: string, args?: Record<string, unknown>) {
    const req: Request = { id: this.nextId++, command, arguments: args };
    const resp = await this.transport.send(req);
    for (const ev of resp.events ?? []) this.onDelta(ev);
    if (!resp.ok) throw new ProtocolError(resp.error ?? "request failed");
    return resp.result;
  }

  async hello(): Promise<{ version: number; theory: string; problems: string[] }> {
    const result = await this.call("hello", { version: PROTOCOL_VERSION });
    if (result.version !== PROTOCOL_VERSION) {
      throw new ProtocolError(
        `server speaks protocol ${result.version}, client needs ${PROTOCOL_VERSION}`,
      );
    }
    return result;
  }

  showTree(problem: string): Promise<TreeSnapshot> {
    return this.call("show-tree", { problem });
  }

  listGoals(): Promise<Record<string, { pending: number[]; closed: boolean }>> {
    return this.call("list-goals");
  }

  catalogs(): Promise<{
    gensets: Record<string, string[]>;
    lemmas: Record<string, string>;
    equivalences: string[];
  }> {
    return this.call("catalogs");
  }

  applicableRules(
    problem: string,
    goal: number,
  ): Promise<{ goal: number; rules: { rule: string; params: string[] }[]; narrowexes: Narrowex[] }> {
    return this.call("applicable-rules", { problem, goal });
  }

  applyRule(
    problem: string,
    goal: number,
    rule: string,
    params: Record<string, any> = {},
  ): Promise<{ children: number[]; closed: boolean }> {
    return this.call("apply-rule", { problem, goal, rule, params });
  }

  auto(problem: string): Promise<{ applications: number; closed: boolean }> {
    return this.call("auto", { problem });
  }

  undo(problem: string): Promise<{ undone: boolean }> {
    return this.call("undo", { problem });
  }

  save(problem: string, path: string): Promise<{ saved: string }> {
    return this.call("save", { problem, path });
  }
}
