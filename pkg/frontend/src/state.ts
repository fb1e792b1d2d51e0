/** UI state machine. One pending request at a time, events merged in arrival
 * order, and the grid only ever shows values the gateway returned. */

import { Gateway, GatewayError, SessionEvent, Credentials } from "./api.js";

/** null = this user has no gateway-confirmed knowledge of the cell. */
export type CellKnowledge = number | null;

export interface UiState {
  session: string | null;
  me: { id: number; name: string } | null;
  cells: number;
  grid: CellKnowledge[];
  selected: number | null;
  myCell: number | null;
  pending: string | null;
  alert: string | null;
  banner: string | null;
  activity: string;
  log: string[];
}

export class Store {
  readonly state: UiState;
  private creds: Credentials | null = null;
  private listeners: Array<() => void> = [];

  constructor(
    private readonly gateway: Gateway,
    cells = 64,
  ) {
    this.state = {
      session: null,
      me: null,
      cells,
      grid: new Array<CellKnowledge>(cells).fill(null),
      selected: null,
      myCell: null,
      pending: null,
      alert: null,
      banner: null,
      activity: "idle",
      log: [],
    };
  }

  subscribe(fn: () => void): void {
    this.listeners.push(fn);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  /** Create (or join) a session and register under `name`. */
  async join(name: string, session?: string): Promise<void> {
    const sid = session ?? (await this.gateway.createSession(this.state.cells));
    const creds = await this.gateway.register(sid, name);
    this.state.session = sid;
    this.creds = creds;
    this.state.me = { id: creds.user, name };
    this.notify();
  }

  /** Grid selection; indexes outside the grid are never issuable. */
  select(cell: number): boolean {
    if (!Number.isInteger(cell) || cell < 0 || cell >= this.state.cells) return false;
    this.state.selected = cell;
    this.notify();
    return true;
  }

  private begin(op: string): boolean {
    if (this.state.pending !== null) return false; // one request in flight, ever
    this.state.pending = op;
    this.state.alert = null;
    this.state.banner = null;
    this.notify();
    return true;
  }

  private fail(err: unknown): void {
    if (err instanceof GatewayError) {
      this.state.banner =
        err.phase !== null
          ? `protocol aborted in phase ${err.phase}`
          : err.message;
    } else {
      this.state.banner = String(err);
    }
  }

  /** Set New Position: one gateway call, outcome rendered from its answer. */
  async setPosition(): Promise<boolean> {
    const { session, selected } = this.state;
    if (session === null || this.creds === null || selected === null) return false;
    if (!this.begin("set")) return false;
    try {
      const out = await this.gateway.setPosition(session, this.creds, selected);
      if (out.result === "occupied") {
        const who = out.occupant ?? `user ${out.occupied_by}`;
        this.state.alert = `friend nearby: ${who}`;
        this.state.grid[selected] = out.occupied_by;
      } else {
        // own position is the one cell we may mark ourselves; the vacated
        // cell becomes unknown rather than guessed empty
        if (this.state.myCell !== null && this.state.myCell !== selected) {
          this.state.grid[this.state.myCell] = null;
        }
        this.state.grid[selected] = this.state.me!.id;
        this.state.myCell = selected;
      }
    } catch (err) {
      this.fail(err);
    } finally {
      this.state.pending = null;
      this.notify();
    }
    return true;
  }

  /** Refresh one cell from the gateway (0 renders as empty). */
  async refreshCell(cell: number): Promise<boolean> {
    const { session } = this.state;
    if (session === null || cell < 0 || cell >= this.state.cells) return false;
    if (!this.begin("get")) return false;
    try {
      this.state.grid[cell] = await this.gateway.readCell(session, cell);
    } catch (err) {
      this.fail(err);
    } finally {
      this.state.pending = null;
      this.notify();
    }
    return true;
  }

  /** WebSocket events arrive one at a time and merge sequentially. */
  applyEvent(ev: SessionEvent): void {
    const op = ev.op ?? "?";
    if (ev.type === "started") {
      this.state.activity = `${op}: protocol execution running`;
    } else if (ev.type === "completed") {
      this.state.activity = `${op}: done`;
    } else {
      this.state.activity = `${op}: aborted`;
      this.state.banner = `protocol aborted in phase ${ev.phase ?? "?"}`;
    }
    this.state.log.push(`${ev.type} ${op}${ev.phase !== undefined ? ` phase ${ev.phase}` : ""}`);
    this.notify();
  }
}
