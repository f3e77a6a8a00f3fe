// Tree view-model: a pure fold over the tree-delta stream. Stale deltas
// (older version than the one already shown) are discarded, so the view
// is a function of the latest snapshot only.

import type { GoalNode, TreeDelta, TreeSnapshot } from "./protocol.js";

export interface ViewState {
  problem: string | null;
  version: number;
  root: number;
  nodes: Map<number, GoalNode>;
  edges: Map<number, string>; // child goal id -> rule label on its edge
  closed: boolean;
  selected: number | null;
}

export function initialState(): ViewState {
  return {
    problem: null,
    version: -1,
    root: 0,
    nodes: new Map(),
    edges: new Map(),
    closed: false,
    selected: null,
  };
}

export function applySnapshot(
  state: ViewState,
  problem: string,
  snap: TreeSnapshot,
): ViewState {
  if (problem === state.problem && snap.version <= state.version) {
    return state; // stale or duplicate delta
  }
  const nodes = new Map<number, GoalNode>();
  for (const n of snap.nodes) nodes.set(n.id, n);
  const edges = new Map<number, string>();
  for (const e of snap.edges) {
    for (const child of e.children) edges.set(child, e.rule);
  }
  let selected = state.problem === problem ? state.selected : null;
  if (selected !== null && !nodes.has(selected)) selected = null;
  if (selected === null) {
    selected = firstPending(snap.root, nodes) ?? snap.root;
  }
  return {
    problem,
    version: snap.version,
    root: snap.root,
    nodes,
    edges,
    closed: snap.closed,
    selected,
  };
}

export function applyDelta(state: ViewState, delta: TreeDelta): ViewState {
  if (state.problem !== null && delta.problem !== state.problem) return state;
  return applySnapshot(state, delta.problem, delta.tree);
}

export function select(state: ViewState, goal: number): ViewState {
  if (!state.nodes.has(goal)) return state;
  return { ...state, selected: goal };
}

export function firstPending(
  root: number,
  nodes: Map<number, GoalNode>,
): number | null {
  const node = nodes.get(root);
  if (!node) return null;
  if (node.children.length === 0) return node.pending ? root : null;
  for (const child of node.children) {
    const hit = firstPending(child, nodes);
    if (hit !== null) return hit;
  }
  return null;
}

export interface TreeRow {
  id: number;
  depth: number;
  rule: string | null;
  node: GoalNode;
}

export function treeRows(state: ViewState): TreeRow[] {
  const rows: TreeRow[] = [];
  const walk = (id: number, depth: number) => {
    const node = state.nodes.get(id);
    if (!node) return;
    rows.push({ id, depth, rule: state.edges.get(id) ?? null, node });
    for (const child of node.children) walk(child, depth + 1);
  };
  if (state.nodes.size) walk(state.root, 0);
  return rows;
}

export function pendingCount(state: ViewState): number {
  let count = 0;
  for (const row of treeRows(state)) {
    if (row.node.pending && row.node.children.length === 0) count += 1;
  }
  return count;
}
