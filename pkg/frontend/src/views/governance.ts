/**
 * Governance tab: proposal list with live state badges, voting, queue and
 * execute controls, and propose forms (threshold change, treasury transfer).
 * Revert reasons from the service surface verbatim in a toast.
 */

import { ApiError } from "../api.js";
import type { ViewContext } from "../context.js";
import type { Proposal, Snapshot } from "../types.js";
import { ethToWei, fmtTokens, getElement } from "../util.js";

const THRESHOLD_FIELDS = [
  "min_temperature", "max_temperature",
  "min_co_level", "max_co_level",
  "min_lux_level", "max_lux_level",
  "min_humidity", "max_humidity",
];

export class GovernanceView {
  readonly name = "Governance";
  private container!: HTMLElement;
  private snapshot: Snapshot | null = null;

  constructor(private readonly ctx: ViewContext) {}

  mount(container: HTMLElement): void {
    this.container = container;
    const fieldOptions = THRESHOLD_FIELDS
      .map((f) => `<option value="${f}">${f.replaceAll("_", " ")}</option>`)
      .join("");
    container.innerHTML = `
      <div class="forms-row">
        <form class="card form" id="propose-threshold">
          <h3>Propose a threshold change</h3>
          <label>Field <select name="field">${fieldOptions}</select></label>
          <label>Value <input name="value" type="number" required value="17"></label>
          <label>Description <input name="description" required
            placeholder="why this change"></label>
          <button type="submit">Propose</button>
        </form>
        <form class="card form" id="propose-transfer">
          <h3>Propose a treasury transfer</h3>
          <label>Source <select name="source">
            <option value="timelock">timelock</option>
            <option value="governor">governor</option>
          </select></label>
          <label>Recipient (name or 0x address) <input name="to" required></label>
          <label>Amount (ETH) <input name="eth" required value="0.01"></label>
          <label>Description <input name="description" required></label>
          <button type="submit">Propose</button>
        </form>
      </div>
      <div id="proposal-list" class="proposal-list"></div>
    `;
    getElement<HTMLFormElement>(container, "#propose-threshold")
      .addEventListener("submit", (event) => this.submitThreshold(event));
    getElement<HTMLFormElement>(container, "#propose-transfer")
      .addEventListener("submit", (event) => this.submitTransfer(event));
    getElement<HTMLElement>(container, "#proposal-list")
      .addEventListener("click", (event) => this.onListClick(event));
  }

  private async submitThreshold(event: Event): Promise<void> {
    event.preventDefault();
    const form = event.currentTarget as HTMLFormElement;
    const data = new FormData(form);
    await this.act(() => this.ctx.api.propose(String(data.get("description")), [{
      contract: "thresholds",
      function: `set_${data.get("field")}`,
      args: [Number(data.get("value"))],
    }]));
  }

  private async submitTransfer(event: Event): Promise<void> {
    event.preventDefault();
    const form = event.currentTarget as HTMLFormElement;
    const data = new FormData(form);
    const source = String(data.get("source"));
    const recipient = String(data.get("to"));
    const to = this.snapshot?.members
      .find((m) => m.name === recipient)?.address ?? recipient;
    await this.act(() => this.ctx.api.propose(String(data.get("description")), [{
      contract: source,
      function: "send_ether",
      args: [to, { int: ethToWei(String(data.get("eth"))) }],
    }]));
  }

  private onListClick(event: Event): void {
    const target = event.target as HTMLElement;
    const action = target.dataset.action;
    const id = target.closest<HTMLElement>("[data-id]")?.dataset.id;
    if (!action || !id) return;
    const api = this.ctx.api;
    if (action === "vote") {
      const support = Number(target.dataset.support) as 0 | 1 | 2;
      void this.act(() => api.vote(id, support));
    } else if (action === "queue") {
      void this.act(() => api.queue(id));
    } else if (action === "execute") {
      void this.act(() => api.execute(id));
    }
  }

  private async act(call: () => Promise<unknown>): Promise<void> {
    try {
      await call();
    } catch (error) {
      this.ctx.toast(error instanceof ApiError
        ? error.message : String(error));
    }
    await this.ctx.refresh();
  }

  render(snapshot: Snapshot): void {
    this.snapshot = snapshot;
    const list = getElement<HTMLElement>(this.container, "#proposal-list");
    if (snapshot.proposals.length === 0) {
      list.innerHTML = `<p class="muted">No proposals yet.</p>`;
      return;
    }
    list.innerHTML = snapshot.proposals
      .map((p) => this.proposalCard(p, snapshot)).join("");
  }

  private proposalCard(p: Proposal, snapshot: Snapshot): string {
    const active = p.state === "Active";
    const votes = `
      <span class="tally">For ${fmtTokens(p.tally.for_tokens)}</span>
      <span class="tally">Against ${fmtTokens(p.tally.against_tokens)}</span>
      <span class="tally">Abstain ${fmtTokens(p.tally.abstain_tokens)}</span>`;
    let controls = `
      <button data-action="vote" data-support="1" ${active ? "" : "disabled"}>Vote For</button>
      <button data-action="vote" data-support="0" ${active ? "" : "disabled"}>Against</button>
      <button data-action="vote" data-support="2" ${active ? "" : "disabled"}>Abstain</button>
      <button data-action="queue" ${p.state === "Succeeded" ? "" : "disabled"}>Queue</button>`;
    if (p.state === "Queued" && p.eta !== null) {
      const wait = p.eta - snapshot.timestamp;
      controls += wait > 0
        ? `<button data-action="execute" disabled
             class="countdown">Execute (ready in ${wait}s)</button>`
        : `<button data-action="execute">Execute</button>`;
    } else {
      controls += `<button data-action="execute" disabled>Execute</button>`;
    }
    return `
      <article class="card proposal" data-id="${p.id}">
        <header>
          <span class="badge state-${p.state.toLowerCase()}">${p.state}</span>
          <strong>${p.description}</strong>
        </header>
        <p class="muted">by ${p.proposer_name} · snapshot block
          ${p.snapshot_block} · deadline ${p.deadline_block}</p>
        <p>${votes}</p>
        <div class="controls">${controls}</div>
      </article>`;
  }
}
