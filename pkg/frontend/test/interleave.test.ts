/** Two clients driving one shared map through the documented gateway API.
 * A plaintext shadow map decides, before every call, what the gateway must
 * answer and what each UI may display afterwards. */
import { describe, expect, it } from "vitest";
import { FetchLike, Gateway } from "../src/api.js";
import { Store } from "../src/state.js";
import { FakeService, mulberry32 } from "./util.js";

function record(seen: Map<number, Set<number>>, cell: number, value: number): void {
  if (!seen.has(cell)) seen.set(cell, new Set());
  seen.get(cell)!.add(value);
}

/** Wrap a fetch so we know exactly which cell values the gateway ever
 * disclosed to this client. */
function tracking(base: FetchLike, seen: Map<number, Set<number>>): FetchLike {
  return async (url, init) => {
    const res = await base(url, init);
    const body = (await res.clone().json().catch(() => ({}))) as Record<string, unknown>;
    const cellMatch = /\/cell\/(\d+)$/.exec(url);
    if (cellMatch && typeof body.value === "number") {
      record(seen, Number(cellMatch[1]), body.value);
    }
    if (url.endsWith("/set") && body.result === "occupied" && init?.body) {
      const req = JSON.parse(String(init.body)) as { cell: number };
      record(seen, req.cell, Number(body.occupied_by));
    }
    return res;
  };
}

/** Invariant: every rendered value was returned by the gateway, except the
 * client's own confirmed position. No inference of other users' cells. */
function expectGridHonest(store: Store, seen: Map<number, Set<number>>): void {
  store.state.grid.forEach((v, i) => {
    if (v === null) return;
    const own = i === store.state.myCell && v === store.state.me!.id;
    expect(own || seen.get(i)?.has(v) === true).toBe(true);
  });
}

describe("two-client interleaving", () => {
  it("matches a shadow map over 100 scripted steps", async () => {
    const svc = new FakeService(64);
    const seen = [new Map<number, Set<number>>(), new Map<number, Set<number>>()];
    const stores = [0, 1].map(
      (i) => new Store(new Gateway("http://svc", tracking(svc.fetch, seen[i]!)), 64),
    );
    await stores[0]!.join("ana");
    await stores[1]!.join("ben", svc.sid);
    const uids = [1, 2];
    const names = ["ana", "ben"];

    // fresh map: every probed cell comes back empty
    for (const cell of [0, 17, 63]) {
      await stores[0]!.refreshCell(cell);
      expect(stores[0]!.state.grid[cell]).toBe(0);
    }

    const shadow = new Array<number>(64).fill(0);
    const positions: Array<number | null> = [null, null];
    const rand = mulberry32(0x5eed1234);
    const randInt = (n: number) => Math.floor(rand() * n);
    let collisions = 0;
    let moves = 0;

    const setAndCheck = async (u: number, cell: number): Promise<void> => {
      const store = stores[u]!;
      const cur = shadow[cell]!;
      store.select(cell);
      await store.setPosition();
      if (cur !== 0 && cur !== uids[u]) {
        collisions += 1;
        // second set onto an occupied cell: alert, and only then
        expect(store.state.alert).toBe(`friend nearby: ${names[cur - 1]!}`);
        expect(store.state.grid[cell]).toBe(cur);
      } else {
        moves += 1;
        expect(store.state.alert).toBeNull();
        if (cur !== uids[u]) {
          shadow[cell] = uids[u]!;
          const prev = positions[u] ?? null;
          if (prev !== null && prev !== cell) shadow[prev] = 0;
          positions[u] = cell;
        }
        expect(store.state.myCell).toBe(cell);
      }
    };

    for (let step = 0; step < 100; step++) {
      const op = randInt(4);
      if (op < 2) {
        await setAndCheck(op, randInt(64));
      } else if (op === 2) {
        const u = randInt(2);
        const cell = randInt(64);
        await stores[u]!.refreshCell(cell);
        expect(stores[u]!.state.grid[cell]).toBe(shadow[cell]);
      } else {
        const u = randInt(2);
        const target = positions[1 - u];
        if (target == null) continue;
        await setAndCheck(u, target);
      }
      expect(svc.cells).toEqual(shadow);
      expectGridHonest(stores[0]!, seen[0]!);
      expectGridHonest(stores[1]!, seen[1]!);
    }
    // the script must actually exercise both outcomes
    expect(moves).toBeGreaterThan(20);
    expect(collisions).toBeGreaterThan(5);
  });

  it("shows a friend's id after they set a cell and we refresh it", async () => {
    const svc = new FakeService(64);
    const ana = new Store(new Gateway("http://svc", svc.fetch), 64);
    const ben = new Store(new Gateway("http://svc", svc.fetch), 64);
    await ana.join("ana");
    await ben.join("ben", svc.sid);

    ben.select(40);
    await ben.setPosition();
    await ana.refreshCell(40);
    expect(ana.state.grid[40]).toBe(2);
  });
});
