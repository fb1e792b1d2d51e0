import { FetchLike } from "../src/api.js";

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** Scripted fetch: routes every call through `handler`, records method+path. */
export function scripted(
  handler: (path: string, init?: RequestInit) => unknown | Promise<unknown>,
): { fetch: FetchLike; calls: string[] } {
  const calls: string[] = [];
  const fetch: FetchLike = async (path, init) => {
    calls.push(`${init?.method ?? "GET"} ${path}`);
    const body = await handler(path, init);
    return body instanceof Response ? body : jsonResponse(body);
  };
  return { fetch, calls };
}

/** Deterministic PRNG for the scripted interleaving. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** In-memory stand-in for the gateway service. Same request/response shapes
 * and the same set semantics: read first, collide on foreign occupants,
 * clear the vacated cell after a move. */
export class FakeService {
  cells: number[];
  private nextUid = 1;
  private tokens = new Map<number, string>();
  private names = new Map<number, string>();
  private positions = new Map<number, number>();
  readonly sid = "fake-1";

  constructor(cellCount = 64) {
    this.cells = new Array<number>(cellCount).fill(0);
  }

  fetch: FetchLike = async (url, init) => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const method = init?.method ?? "GET";
    const body = init?.body ? (JSON.parse(String(init.body)) as Record<string, unknown>) : {};

    if (method === "POST" && path === "/session") {
      return jsonResponse({ session: this.sid, cells: this.cells.length });
    }
    if (method === "POST" && path === `/session/${this.sid}/user`) {
      const uid = this.nextUid++;
      const token = `tok-${uid}`;
      this.tokens.set(uid, token);
      this.names.set(uid, String(body.name));
      return jsonResponse({ user: uid, token });
    }
    if (method === "POST" && path === `/session/${this.sid}/set`) {
      const uid = Number(body.user);
      const cell = Number(body.cell);
      const auth = new Headers(init?.headers).get("Authorization");
      if (auth !== `Bearer ${this.tokens.get(uid)}`) {
        return jsonResponse({ detail: "bad credentials" }, 401);
      }
      if (cell < 0 || cell >= this.cells.length) {
        return jsonResponse({ detail: "cell out of range" }, 400);
      }
      const current = this.cells[cell]!;
      if (current !== 0 && current !== uid) {
        return jsonResponse({
          result: "occupied",
          occupied_by: current,
          occupant: this.names.get(current),
        });
      }
      if (current !== uid) {
        this.cells[cell] = uid;
        const prev = this.positions.get(uid);
        if (prev !== undefined && prev !== cell) this.cells[prev] = 0;
        this.positions.set(uid, cell);
      }
      return jsonResponse({ result: "moved" });
    }
    const cellMatch = /^\/session\/([^/]+)\/cell\/(\d+)$/.exec(path);
    if (method === "GET" && cellMatch && cellMatch[1] === this.sid) {
      const n = Number(cellMatch[2]);
      if (n >= this.cells.length) return jsonResponse({ detail: "cell out of range" }, 400);
      return jsonResponse({ value: this.cells[n] });
    }
    return jsonResponse({ detail: `no route ${method} ${path}` }, 404);
  };
}
