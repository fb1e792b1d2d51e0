/** Typed client for the friend-finder gateway. No protocol logic lives here:
 * every byte of map state comes back from the HTTP/WS API. */

export interface Credentials {
  user: number;
  token: string;
}

export type SetOutcome =
  | { result: "moved" }
  | { result: "occupied"; occupied_by: number; occupant?: string };

export interface SessionEvent {
  type: "started" | "completed" | "aborted";
  op?: string;
  phase?: number;
  execution?: number;
}

export class GatewayError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly phase: number | null,
  ) {
    super(message);
    this.name = "GatewayError";
  }
}

export type FetchLike = (path: string, init?: RequestInit) => Promise<Response>;

/** Minimal slice of the WebSocket interface the client needs. */
export interface SocketLike {
  onmessage: ((ev: { data: unknown }) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

const PHASE = /phase (\d+)/;

export class Gateway {
  constructor(
    readonly base: string,
    private readonly fetchImpl: FetchLike = (p, init) => fetch(p, init),
    private readonly socketFactory: SocketFactory | null = null,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    let body: unknown = {};
    try {
      body = await res.json();
    } catch {
      // non-JSON error bodies fall through to statusText
    }
    if (!res.ok) {
      const detail =
        typeof (body as { detail?: unknown }).detail === "string"
          ? ((body as { detail: string }).detail)
          : `${res.status} ${res.statusText}`;
      const phase = PHASE.exec(detail)?.[1];
      throw new GatewayError(detail, res.status, phase ? Number(phase) : null);
    }
    return body as T;
  }

  private post(payload: unknown, token?: string): RequestInit {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (token) headers["Authorization"] = `Bearer ${token}`;
    return { method: "POST", headers, body: JSON.stringify(payload) };
  }

  async createSession(cells: number): Promise<string> {
    const r = await this.request<{ session: string }>("/session", this.post({ cells }));
    return r.session;
  }

  register(session: string, name: string): Promise<Credentials> {
    return this.request<Credentials>(`/session/${session}/user`, this.post({ name }));
  }

  setPosition(session: string, creds: Credentials, cell: number): Promise<SetOutcome> {
    return this.request<SetOutcome>(
      `/session/${session}/set`,
      this.post({ user: creds.user, cell }, creds.token),
    );
  }

  async readCell(session: string, cell: number): Promise<number> {
    const r = await this.request<{ value: number }>(`/session/${session}/cell/${cell}`);
    return r.value;
  }

  /** Subscribe to per-execution lifecycle events; returns an unsubscribe. */
  events(session: string, onEvent: (ev: SessionEvent) => void): () => void {
    const make =
      this.socketFactory ??
      ((url: string) => new WebSocket(url) as unknown as SocketLike);
    const wsBase = this.base.replace(/^http/, "ws");
    const sock = make(`${wsBase}/session/${session}/events`);
    sock.onmessage = (ev) => {
      try {
        onEvent(JSON.parse(String(ev.data)) as SessionEvent);
      } catch {
        // malformed frames are dropped; the UI only ever renders parsed events
      }
    };
    return () => sock.close();
  }
}
