/** DOM rendering: an 8-wide grid of radio-button cells, the action button,
 * status line, proximity alert and error banner. Renders state verbatim. */

import { UiState } from "./state.js";

export interface Handlers {
  onSelect(cell: number): void;
  onSet(): void;
  onRefresh(cell: number): void;
}

function cellText(state: UiState, i: number): string {
  const v = state.grid[i];
  if (v === null || v === undefined) return "";       // unknown: show nothing
  if (v === 0) return "";                              // confirmed empty
  return v === state.me?.id ? "you" : String(v);
}

export function render(root: HTMLElement, state: UiState, h: Handlers): void {
  root.textContent = "";
  const doc = root.ownerDocument;

  const status = doc.createElement("div");
  status.id = "activity";
  status.textContent = state.pending
    ? `${state.activity} (request in flight)`
    : state.activity;
  root.appendChild(status);

  if (state.banner) {
    const banner = doc.createElement("div");
    banner.id = "banner";
    banner.className = "banner";
    banner.textContent = state.banner;
    root.appendChild(banner);
  }

  if (state.alert) {
    const alert = doc.createElement("div");
    alert.id = "alert";
    alert.className = "alert";
    alert.textContent = state.alert;
    root.appendChild(alert);
  }

  const grid = doc.createElement("div");
  grid.id = "grid";
  for (let i = 0; i < state.cells; i++) {
    const label = doc.createElement("label");
    label.className = "cell" + (state.grid[i] === null ? " unknown" : "");
    const radio = doc.createElement("input");
    radio.type = "radio";
    radio.name = "cell";
    radio.value = String(i);
    radio.checked = state.selected === i;
    radio.disabled = state.pending !== null;
    radio.addEventListener("change", () => h.onSelect(i));
    const text = doc.createElement("span");
    text.textContent = cellText(state, i);
    label.title = `cell ${i}`;
    label.addEventListener("dblclick", () => h.onRefresh(i));
    label.appendChild(radio);
    label.appendChild(text);
    grid.appendChild(label);
  }
  root.appendChild(grid);

  const button = doc.createElement("button");
  button.id = "set-position";
  button.textContent = "Set New Position";
  button.disabled = state.pending !== null || state.selected === null;
  button.addEventListener("click", () => h.onSet());
  root.appendChild(button);

  const refresh = doc.createElement("button");
  refresh.id = "refresh-cell";
  refresh.textContent = "Refresh Selected Cell";
  refresh.disabled = state.pending !== null || state.selected === null;
  refresh.addEventListener("click", () => {
    if (state.selected !== null) h.onRefresh(state.selected);
  });
  root.appendChild(refresh);

  const log = doc.createElement("ul");
  log.id = "log";
  for (const line of state.log.slice(-12)) {
    const li = doc.createElement("li");
    li.textContent = line;
    log.appendChild(li);
  }
  root.appendChild(log);
}
