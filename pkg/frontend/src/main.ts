// Entry point: connect to the serving prover, pick the first problem,
// and keep the explorer in sync. Connection failures surface as a banner
// and trigger reconnection with a fresh show-tree.

import { HttpTransport, ProtocolError, SessionClient } from "./protocol.js";
import { Explorer } from "./view.js";

const RETRY_MS = 2000;

function showBanner(msg: string, kind: "error" | "info") {
  const el = document.getElementById("banner")!;
  el.textContent = msg;
  el.className = `banner ${kind}`;
  if (kind === "info") {
    setTimeout(() => {
      if (el.textContent === msg) el.className = "banner hidden";
    }, 2500);
  }
}

async function connect(): Promise<void> {
  const client = new SessionClient(new HttpTransport(""));
  const root = document.getElementById("app")!;
  const explorer = new Explorer(client, root, showBanner);
  try {
    const hello = await client.hello();
    showBanner(
      `connected: theory ${hello.theory}, problems ${hello.problems.join(", ")}`,
      "info",
    );
    const picker = document.getElementById("problems")!;
    picker.textContent = "";
    for (const p of hello.problems) {
      const btn = document.createElement("button");
      btn.textContent = p;
      btn.addEventListener("click", () => void explorer.open(p));
      picker.appendChild(btn);
    }
    if (hello.problems.length) await explorer.open(hello.problems[0]);
  } catch (e) {
    if (e instanceof ProtocolError && /protocol/.test(e.message)) {
      showBanner(`incompatible server: ${e.message}`, "error");
      return; // no point reconnecting across a version mismatch
    }
    showBanner(
      `connection lost (${(e as Error).message}); retrying…`,
      "error",
    );
    setTimeout(() => void connect(), RETRY_MS);
  }
}

void connect();
