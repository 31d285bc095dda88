/** Members tab: the registry with balances and voting power, plus
 * member-gated add/remove controls. */

import { ApiError } from "../api.js";
import type { ViewContext } from "../context.js";
import type { Snapshot } from "../types.js";
import { fmtTokens, getElement, shortAddress } from "../util.js";

export class MembersView {
  readonly name = "Members";
  private container!: HTMLElement;

  constructor(private readonly ctx: ViewContext) {}

  mount(container: HTMLElement): void {
    this.container = container;
    container.innerHTML = `
      <div id="member-table"></div>
      <form class="card form inline" id="manage-member">
        <label>Member (name or 0x address) <input name="member" required></label>
        <button type="submit" data-op="add">Add</button>
        <button type="submit" data-op="remove">Remove</button>
      </form>
    `;
    const form = getElement<HTMLFormElement>(container, "#manage-member");
    form.addEventListener("submit", async (event) => {
      event.preventDefault();
      const submitter = (event as SubmitEvent).submitter as HTMLElement | null;
      const op = (submitter?.dataset.op ?? "add") as "add" | "remove";
      const member = String(new FormData(form).get("member"));
      try {
        await this.ctx.api.manageMember(op, member);
      } catch (error) {
        this.ctx.toast(error instanceof ApiError ? error.message : String(error));
      }
      await this.ctx.refresh();
    });
  }

  render(snapshot: Snapshot): void {
    const rows = snapshot.members.map((m) => `
      <tr>
        <td>${m.name}</td>
        <td class="mono">${shortAddress(m.address)}</td>
        <td class="num">${m.eth.toFixed(4)}</td>
        <td class="num">${fmtTokens(m.tokens)}</td>
        <td class="num">${fmtTokens(m.votes_tokens)}</td>
      </tr>`).join("");
    getElement<HTMLElement>(this.container, "#member-table").innerHTML = `
      <table class="card table">
        <thead><tr><th>Name</th><th>Address</th><th>ETH</th>
          <th>Tokens</th><th>Votes</th></tr></thead>
        <tbody>${rows}</tbody>
      </table>`;
  }
}
