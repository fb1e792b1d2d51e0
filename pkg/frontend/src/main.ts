import { Gateway } from "./api.js";
import { Store } from "./state.js";
import { render } from "./render.js";

const params = new URLSearchParams(location.search);
const base = params.get("gateway") ?? "http://127.0.0.1:8000";
const name = params.get("name") ?? window.prompt("your name") ?? "anon";
const session = params.get("session") ?? undefined;

const gateway = new Gateway(base);
const store = new Store(gateway, 64);
const root = document.getElementById("app")!;

const handlers = {
  onSelect: (cell: number) => store.select(cell),
  onSet: () => void store.setPosition(),
  onRefresh: (cell: number) => void store.refreshCell(cell),
};

store.subscribe(() => render(root, store.state, handlers));

store
  .join(name, session)
  .then(() => {
    const sid = store.state.session!;
    history.replaceState(null, "", `?gateway=${encodeURIComponent(base)}&session=${sid}&name=${encodeURIComponent(name)}`);
    gateway.events(sid, (ev) => store.applyEvent(ev));
    render(root, store.state, handlers);
  })
  .catch((err) => {
    root.textContent = `could not join: ${err}`;
  });
