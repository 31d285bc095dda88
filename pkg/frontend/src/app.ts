/**
 * Application shell: actor session, tab navigation, the poll loop, and the
 * toast channel. All rendered data comes from a single /snapshot per cycle,
 * so no view ever mixes state from different blocks.
 */

import { ApiClient } from "./api.js";
import type { ViewContext } from "./context.js";
import type { Snapshot } from "./types.js";
import { getElement } from "./util.js";
import { AssistantView } from "./views/assistant.js";
import { GovernanceView } from "./views/governance.js";
import { MembersView } from "./views/members.js";
import { TreasuryView } from "./views/treasury.js";
import { TwinView } from "./views/twin.js";
import { UserView } from "./views/user.js";

export const DEFAULT_POLL_MS = 2000;

interface View {
  readonly name: string;
  mount(container: HTMLElement): void;
  render(snapshot: Snapshot): void | Promise<void>;
}

export class App {
  readonly api: ApiClient;
  readonly views: View[];
  private active!: View;
  private readonly panels = new Map<string, HTMLElement>();
  private lastSnapshot: Snapshot | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private refreshing = false;

  constructor(private readonly root: HTMLElement, api?: ApiClient) {
    this.api = api ?? new ApiClient();
    const ctx: ViewContext = {
      api: this.api,
      toast: (message) => this.toast(message),
      refresh: () => this.refresh(),
    };
    this.views = [
      new GovernanceView(ctx),
      new TreasuryView(ctx),
      new TwinView(ctx),
      new MembersView(ctx),
      new UserView(ctx),
      new AssistantView(ctx),
    ];
  }

  async init(pollMs: number = DEFAULT_POLL_MS): Promise<void> {
    this.root.innerHTML = `
      <header class="topbar">
        <span class="brand">govtwin</span>
        <nav id="tabs"></nav>
        <label class="actor-picker">Acting as
          <select id="actor-select"></select>
        </label>
        <span id="clock" class="muted"></span>
      </header>
      <div id="stale-banner" class="stale-banner" hidden>
        connection lost – showing stale data
      </div>
      <main id="panels"></main>
      <div id="toast" class="toast" hidden></div>
    `;
    const tabs = getElement<HTMLElement>(this.root, "#tabs");
    const panels = getElement<HTMLElement>(this.root, "#panels");
    for (const view of this.views) {
      const button = document.createElement("button");
      button.textContent = view.name;
      button.dataset.tab = view.name;
      button.addEventListener("click", () => void this.switchTab(view.name));
      tabs.appendChild(button);
      const panel = document.createElement("section");
      panel.dataset.panel = view.name;
      panel.hidden = true;
      panels.appendChild(panel);
      view.mount(panel);
      this.panels.set(view.name, panel);
    }

    await this.loadActors();
    await this.switchTab(this.views[0].name);
    if (pollMs > 0) {
      this.timer = setInterval(() => void this.refresh(), pollMs);
    }
  }

  stop(): void {
    if (this.timer) clearInterval(this.timer);
  }

  private async loadActors(): Promise<void> {
    const select = getElement<HTMLSelectElement>(this.root, "#actor-select");
    const { members } = await this.api.members();
    select.replaceChildren();
    for (const member of members) {
      const option = document.createElement("option");
      option.value = member.name;
      option.textContent = member.name;
      select.appendChild(option);
    }
    this.api.actor = select.value || null;
    select.addEventListener("change", () => {
      // actor switching changes only the request header, never cached state
      this.api.actor = select.value;
      void this.refresh();
    });
  }

  async switchTab(name: string): Promise<void> {
    const view = this.views.find((v) => v.name === name);
    if (!view) throw new Error(`unknown tab ${name}`);
    this.active = view;
    for (const [panelName, panel] of this.panels) {
      panel.hidden = panelName !== name;
    }
    for (const button of this.root.querySelectorAll<HTMLElement>("[data-tab]")) {
      button.classList.toggle("active", button.dataset.tab === name);
    }
    await this.refresh();
  }

  /** One poll cycle: a single consistent snapshot drives the active view. */
  async refresh(): Promise<void> {
    if (this.refreshing) return;
    this.refreshing = true;
    const banner = getElement<HTMLElement>(this.root, "#stale-banner");
    try {
      const snapshot = await this.api.snapshot();
      this.lastSnapshot = snapshot;
      banner.hidden = true;
      getElement<HTMLElement>(this.root, "#clock").textContent =
        `block ${snapshot.block_height} · tick ${snapshot.tick} · ` +
        `t=${snapshot.timestamp}s`;
      await this.active.render(snapshot);
    } catch {
      banner.hidden = false;  // keep rendering the stale snapshot
      if (this.lastSnapshot) await this.active.render(this.lastSnapshot);
    } finally {
      this.refreshing = false;
    }
  }

  get snapshot(): Snapshot | null {
    return this.lastSnapshot;
  }

  toast(message: string): void {
    const toast = getElement<HTMLElement>(this.root, "#toast");
    toast.textContent = message;
    toast.hidden = false;
    setTimeout(() => { toast.hidden = true; }, 4000);
  }
}
