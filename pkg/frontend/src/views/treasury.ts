/** Treasury tab: DAO balances plus a direct send through the contracts'
 * unrestricted send functions. Governed transfers go through proposals. */

import { ApiError } from "../api.js";
import type { ViewContext } from "../context.js";
import type { Snapshot } from "../types.js";
import { ethToWei, fmtTokens, getElement } from "../util.js";

export class TreasuryView {
  readonly name = "Treasury";
  private container!: HTMLElement;

  constructor(private readonly ctx: ViewContext) {}

  mount(container: HTMLElement): void {
    this.container = container;
    container.innerHTML = `
      <div id="treasury-cards" class="stat-row"></div>
      <form class="card form" id="direct-send">
        <h3>Direct send (unrestricted contract function)</h3>
        <label>Source <select name="source">
          <option value="timelock">timelock</option>
          <option value="governor">governor</option>
        </select></label>
        <label>Recipient <input name="to" required></label>
        <label>Amount (ETH) <input name="eth" required value="0.001"></label>
        <button type="submit">Send</button>
      </form>
    `;
    getElement<HTMLFormElement>(container, "#direct-send")
      .addEventListener("submit", async (event) => {
        event.preventDefault();
        const data = new FormData(event.currentTarget as HTMLFormElement);
        try {
          await this.ctx.api.treasuryTransfer(
            String(data.get("source")) as "governor" | "timelock",
            String(data.get("to")),
            ethToWei(String(data.get("eth"))));
        } catch (error) {
          this.ctx.toast(error instanceof ApiError ? error.message : String(error));
        }
        await this.ctx.refresh();
      });
  }

  render(snapshot: Snapshot): void {
    const treasury = snapshot.treasury;
    getElement<HTMLElement>(this.container, "#treasury-cards").innerHTML = `
      <div class="card stat"><span class="label">DAO native balance</span>
        <span class="value" id="treasury-eth">${treasury.eth.toFixed(6)} ETH</span></div>
      <div class="card stat"><span class="label">Token treasury</span>
        <span class="value">${fmtTokens(treasury.tokens)} BFHT</span></div>
      <div class="card stat"><span class="label">Fees burned</span>
        <span class="value">${(Number(snapshot.fees_burned) / 1e18).toFixed(6)} ETH</span></div>
    `;
  }
}
