/** User tab: the selected actor's own balances and voting status. */

import type { ViewContext } from "../context.js";
import type { Snapshot } from "../types.js";
import { fmtTokens, getElement } from "../util.js";

export class UserView {
  readonly name = "User";
  private container!: HTMLElement;

  constructor(private readonly ctx: ViewContext) {}

  mount(container: HTMLElement): void {
    this.container = container;
    container.innerHTML = `<div id="user-cards" class="stat-row"></div>`;
  }

  async render(_snapshot: Snapshot): Promise<void> {
    const actor = this.ctx.api.actor;
    const target = getElement<HTMLElement>(this.container, "#user-cards");
    if (!actor) {
      target.innerHTML = `<p class="muted">Select an actor first.</p>`;
      return;
    }
    const { accounts } = await this.ctx.api.accounts();
    const me = accounts.find((a) => a.name === actor || a.address === actor);
    if (!me) {
      target.innerHTML = `<p class="muted">Unknown actor ${actor}.</p>`;
      return;
    }
    target.innerHTML = `
      <div class="card stat"><span class="label">Acting as</span>
        <span class="value">${me.name}</span>
        <span class="mono muted">${me.address}</span></div>
      <div class="card stat"><span class="label">Native balance</span>
        <span class="value">${me.eth.toFixed(6)} ETH</span></div>
      <div class="card stat"><span class="label">Governance tokens</span>
        <span class="value">${fmtTokens(me.tokens)} BFHT</span></div>
      <div class="card stat"><span class="label">Voting power</span>
        <span class="value">${fmtTokens(me.votes_tokens)}</span>
        <span class="muted">${me.is_member ? "registry member" : "not in registry"}</span></div>
    `;
  }
}
