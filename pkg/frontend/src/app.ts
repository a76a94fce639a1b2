import { Api, ApiError } from "./api.js";
import { renderDbPanel, renderDeltaList, renderStateTable, renderTranscript } from "./render.js";
import type { MergedState, TranscriptTurn } from "./types.js";

export type PanelName = "state" | "delta" | "db";

// the slice of the client the app actually calls; tests substitute fakes
export type ConsoleApi = Pick<Api, "createSession" | "sendUtterance" | "getSession">;

export interface AppOptions {
  api: ConsoleApi;
  root: HTMLElement;
}

// Static shell is built once; render() only refills the dynamic slots, so
// panel collapse flags and the composer input survive every turn update.
const SHELL = `
  <div class="retry-banner hidden"><span class="msg"></span><button class="retry">retry</button></div>
  <div class="layout">
    <section class="chat">
      <div class="slot-transcript"></div>
      <form class="composer">
        <input name="utterance" autocomplete="off" placeholder="say something" />
        <button type="submit" class="send">send</button>
      </form>
      <div class="chat-tools">
        <label><input type="checkbox" class="delex-toggle" /> show placeholders</label>
        <button type="button" class="copy-json">copy as json</button>
      </div>
    </section>
    <aside class="inspectors">
      <section class="panel" data-panel="state">
        <button type="button" class="panel-head">state</button>
        <div class="panel-body slot-state"></div>
      </section>
      <section class="panel" data-panel="delta">
        <button type="button" class="panel-head">last delta</button>
        <div class="panel-body slot-delta"></div>
      </section>
      <section class="panel" data-panel="db">
        <button type="button" class="panel-head">db</button>
        <div class="panel-body slot-db"></div>
      </section>
    </aside>
  </div>
  <footer class="protocol-note"></footer>
`;

export class App {
  readonly api: ConsoleApi;
  readonly root: HTMLElement;
  private readonly doc: Document;

  sessionId: string | null = null;
  protocolNote = "";
  turns: TranscriptTurn[] = [];
  pending = false;
  pendingText: string | null = null;
  error: string | null = null;
  showDelex = false;
  panels: Record<PanelName, boolean> = { state: true, delta: false, db: false };
  private retryAction: (() => Promise<void>) | null = null;

  constructor(opts: AppOptions) {
    this.api = opts.api;
    this.root = opts.root;
    this.doc = opts.root.ownerDocument;
    this.root.innerHTML = SHELL;
    this.wire();
    this.render();
  }

  private q<T extends Element>(selector: string): T {
    const el = this.root.querySelector<T>(selector);
    if (!el) throw new Error(`shell is missing ${selector}`);
    return el;
  }

  private wire(): void {
    this.q<HTMLFormElement>(".composer").addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.send(this.input().value);
    });
    this.q<HTMLButtonElement>(".retry").addEventListener("click", () => {
      void this.retry();
    });
    this.q<HTMLInputElement>(".delex-toggle").addEventListener("change", (ev) => {
      this.showDelex = (ev.target as HTMLInputElement).checked;
      this.render();
    });
    this.q<HTMLButtonElement>(".copy-json").addEventListener("click", () => {
      void this.copyJson();
    });
    for (const head of this.root.querySelectorAll<HTMLButtonElement>(".panel-head")) {
      head.addEventListener("click", () => {
        const name = head.closest<HTMLElement>(".panel")?.dataset.panel;
        if (name) this.togglePanel(name as PanelName);
      });
    }
  }

  input(): HTMLInputElement {
    return this.q<HTMLInputElement>(".composer input");
  }

  async start(): Promise<void> {
    this.turns = [];
    this.sessionId = null;
    this.error = null;
    try {
      const created = await this.api.createSession();
      this.sessionId = created.session_id;
      this.protocolNote = created.protocol_note;
    } catch (err) {
      this.fail(err, () => this.start());
    }
    this.render();
  }

  async send(text: string): Promise<boolean> {
    const trimmed = text.trim();
    if (!trimmed || this.pending || !this.sessionId) return false;
    this.pending = true;
    this.pendingText = trimmed;
    this.error = null;
    this.input().value = "";
    this.render();
    try {
      const doc = await this.api.sendUtterance(this.sessionId, trimmed);
      const { turn: _turn, ...stored } = doc;
      this.turns.push({ ...stored, user: trimmed.toLowerCase().split(/\s+/) });
    } catch (err) {
      this.input().value = trimmed; // keep the utterance for another try
      this.fail(err, () => this.send(trimmed).then(() => undefined));
      return false;
    } finally {
      this.pending = false;
      this.pendingText = null;
      this.render();
    }
    return true;
  }

  /** Replace the local transcript with the server's copy. */
  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    const doc = await this.api.getSession(this.sessionId);
    this.turns = doc.turns;
    this.render();
  }

  async retry(): Promise<void> {
    const action = this.retryAction;
    this.retryAction = null;
    this.error = null;
    this.render();
    if (action) await action();
  }

  togglePanel(name: PanelName): void {
    this.panels[name] = !this.panels[name];
    this.render();
  }

  transcriptJson(): string {
    return JSON.stringify(
      { session_id: this.sessionId, turns: this.turns },
      null,
      2,
    );
  }

  async copyJson(): Promise<string> {
    const text = this.transcriptJson();
    const clip = (globalThis.navigator as Navigator | undefined)?.clipboard;
    if (clip) await clip.writeText(text);
    return text;
  }

  mergedState(index: number): MergedState {
    const turn = this.turns[index];
    return turn ? turn.merged_state : {};
  }

  private fail(err: unknown, again: () => Promise<void>): void {
    this.error = err instanceof ApiError
      ? `${err.message} (${err.status})`
      : err instanceof Error ? err.message : String(err);
    this.retryAction = again;
  }

  render(): void {
    const banner = this.q<HTMLElement>(".retry-banner");
    banner.classList.toggle("hidden", this.error === null);
    this.q<HTMLElement>(".retry-banner .msg").textContent = this.error ?? "";

    const transcriptSlot = this.q<HTMLElement>(".slot-transcript");
    transcriptSlot.replaceChildren(
      renderTranscript(this.doc, this.turns, this.showDelex),
    );
    if (this.pending && this.pendingText !== null) {
      const bubble = this.doc.createElement("div");
      bubble.className = "bubble user pending";
      bubble.textContent = this.pendingText;
      transcriptSlot.firstElementChild?.appendChild(bubble);
    }

    const last = this.turns[this.turns.length - 1];
    const prev = this.mergedState(this.turns.length - 2);
    const curr = this.mergedState(this.turns.length - 1);
    this.q<HTMLElement>(".slot-state").replaceChildren(
      renderStateTable(this.doc, prev, curr),
    );
    this.q<HTMLElement>(".slot-delta").replaceChildren(
      renderDeltaList(this.doc, last ? last.levenshtein_state : []),
    );
    const dbSlot = this.q<HTMLElement>(".slot-db");
    if (last) {
      dbSlot.replaceChildren(renderDbPanel(this.doc, last.db));
    } else {
      dbSlot.textContent = "(no turns yet)";
    }

    for (const section of this.root.querySelectorAll<HTMLElement>(".panel")) {
      const name = section.dataset.panel as PanelName;
      section.classList.toggle("collapsed", !this.panels[name]);
    }

    const busy = this.pending || this.sessionId === null;
    this.q<HTMLInputElement>(".composer input").disabled = busy;
    this.q<HTMLButtonElement>(".composer .send").disabled = busy;
    this.q<HTMLElement>(".protocol-note").textContent = this.protocolNote;
  }
}
