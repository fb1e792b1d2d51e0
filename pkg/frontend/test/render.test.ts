// @vitest-environment jsdom
import { describe, expect, it, vi } from "vitest";
import { Handlers, render } from "../src/render.js";
import { UiState } from "../src/state.js";

function freshState(): UiState {
  return {
    session: "s1",
    me: { id: 1, name: "ana" },
    cells: 64,
    grid: new Array(64).fill(null),
    selected: null,
    myCell: null,
    pending: null,
    alert: null,
    banner: null,
    activity: "idle",
    log: [],
  };
}

function handlers(): Handlers {
  return { onSelect: vi.fn(), onSet: vi.fn(), onRefresh: vi.fn() };
}

function mount(state: UiState, h: Handlers = handlers()): HTMLElement {
  const root = document.createElement("div");
  // jsdom only runs radio activation behavior on attached elements
  document.body.appendChild(root);
  render(root, state, h);
  return root;
}

describe("render", () => {
  it("draws one selectable radio per grid cell", () => {
    const root = mount(freshState());
    const radios = root.querySelectorAll<HTMLInputElement>("#grid input[name=cell]");
    expect(radios).toHaveLength(64);
    expect([...radios].every((r) => !r.disabled && !r.checked)).toBe(true);
    // nothing selected yet, so both actions stay unavailable
    expect(root.querySelector<HTMLButtonElement>("#set-position")!.disabled).toBe(true);
    expect(root.querySelector<HTMLButtonElement>("#refresh-cell")!.disabled).toBe(true);
  });

  it("labels cells from gateway knowledge only", () => {
    const state = freshState();
    state.grid[3] = 1; // me
    state.grid[4] = 2; // friend
    state.grid[5] = 0; // confirmed empty
    const root = mount(state);
    const text = (i: number) => root.querySelectorAll(".cell span")[i]!.textContent;
    expect(text(3)).toBe("you");
    expect(text(4)).toBe("2");
    expect(text(5)).toBe("");
    expect(text(6)).toBe("");
    const cells = root.querySelectorAll(".cell");
    expect(cells[5]!.className).toBe("cell");
    expect(cells[6]!.className).toBe("cell unknown");
  });

  it("shows alert and banner only when set", () => {
    const quiet = mount(freshState());
    expect(quiet.querySelector("#alert")).toBeNull();
    expect(quiet.querySelector("#banner")).toBeNull();

    const state = freshState();
    state.alert = "friend nearby: ben";
    state.banner = "protocol aborted in phase 5";
    const loud = mount(state);
    expect(loud.querySelector("#alert")!.textContent).toBe("friend nearby: ben");
    expect(loud.querySelector("#banner")!.textContent).toBe("protocol aborted in phase 5");
  });

  it("locks the controls while a request is in flight", () => {
    const state = freshState();
    state.selected = 9;
    state.pending = "set";
    state.activity = "set: protocol execution running";
    const root = mount(state);
    const radios = root.querySelectorAll<HTMLInputElement>("input[name=cell]");
    expect([...radios].every((r) => r.disabled)).toBe(true);
    expect(root.querySelector<HTMLButtonElement>("#set-position")!.disabled).toBe(true);
    expect(root.querySelector<HTMLButtonElement>("#refresh-cell")!.disabled).toBe(true);
    expect(root.querySelector("#activity")!.textContent).toBe(
      "set: protocol execution running (request in flight)",
    );
  });

  it("dispatches selections and actions to the handlers", () => {
    const h = handlers();
    const state = freshState();
    state.selected = 2;
    const root = mount(state, h);
    root.querySelectorAll<HTMLInputElement>("input[name=cell]")[9]!.click();
    expect(h.onSelect).toHaveBeenCalledWith(9);
    root.querySelector<HTMLButtonElement>("#set-position")!.click();
    expect(h.onSet).toHaveBeenCalledTimes(1);
    root.querySelector<HTMLButtonElement>("#refresh-cell")!.click();
    expect(h.onRefresh).toHaveBeenCalledWith(2);
    root
      .querySelectorAll(".cell")[11]!
      .dispatchEvent(new MouseEvent("dblclick", { bubbles: true }));
    expect(h.onRefresh).toHaveBeenLastCalledWith(11);
  });

  it("shows only the last twelve log lines", () => {
    const state = freshState();
    state.log = Array.from({ length: 15 }, (_, i) => `line ${i}`);
    const root = mount(state);
    const items = root.querySelectorAll("#log li");
    expect(items).toHaveLength(12);
    expect(items[0]!.textContent).toBe("line 3");
    expect(items[11]!.textContent).toBe("line 14");
  });
});
