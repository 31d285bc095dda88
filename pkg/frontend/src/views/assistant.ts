/**
 * Assistant tab: upload a telemetry CSV, then render exactly what the
 * service computed: summaries, recommendation cards with savings figures,
 * the narrative text, and an annotated occupancy/energy plot. No statistics
 * are computed client-side.
 */

import { ApiError } from "../api.js";
import { lineChart } from "../charts.js";
import type { ViewContext } from "../context.js";
import type { PlotSpec, Recommendation, Snapshot } from "../types.js";
import { fmtHourWindow, getElement, readFileText } from "../util.js";

export class AssistantView {
  readonly name = "Assistant";
  private container!: HTMLElement;

  constructor(private readonly ctx: ViewContext) {}

  mount(container: HTMLElement): void {
    this.container = container;
    container.innerHTML = `
      <form class="card form inline" id="upload-form">
        <label>Telemetry CSV <input type="file" name="csv" accept=".csv,text/csv"></label>
        <button type="submit">Analyze</button>
        <span class="muted" id="upload-status"></span>
      </form>
      <div id="assistant-results"></div>
    `;
    getElement<HTMLFormElement>(container, "#upload-form")
      .addEventListener("submit", async (event) => {
        event.preventDefault();
        const input = getElement<HTMLInputElement>(this.container,
                                                   "input[name=csv]");
        const file = input.files?.[0];
        if (!file) {
          this.ctx.toast("choose a CSV file first");
          return;
        }
        await this.analyze(await readFileText(file));
      });
  }

  /** Upload CSV text and render the service's analysis. */
  async analyze(csv: string): Promise<void> {
    const status = getElement<HTMLElement>(this.container, "#upload-status");
    try {
      const uploaded = await this.ctx.api.uploadCsv(csv);
      status.textContent =
        `${uploaded.rows} rows · ${uploaded.idle_windows} idle windows`;
      const [recs, plot] = await Promise.all([
        this.ctx.api.analyticsRecommendations(),
        this.ctx.api.analyticsPlot(["occupancy", "energy"]).catch(() =>
          this.ctx.api.analyticsPlot(["occupancy", "power_w"])),
      ]);
      this.renderResults(recs.recommendations, recs.narrative, plot);
    } catch (error) {
      const reason = error instanceof ApiError ? error.message : String(error);
      status.textContent = "";
      this.ctx.toast(reason);
      getElement<HTMLElement>(this.container, "#assistant-results").innerHTML =
        reason.includes("empty")
          ? `<p class="muted">empty dataset</p>` : "";
    }
  }

  private renderResults(recommendations: Recommendation[], narrative: string,
                        plot: PlotSpec): void {
    const results = getElement<HTMLElement>(this.container, "#assistant-results");
    const cards = recommendations.length === 0
      ? `<p class="muted">No recommendations: nothing out of pattern.</p>`
      : recommendations.map((r) => `
        <article class="card recommendation" data-kind="${r.kind}">
          <header><span class="badge">${r.kind.replaceAll("_", " ")}</span>
            <strong>${r.device}</strong>
            <span class="window">${fmtHourWindow(r.window)}</span></header>
          <p class="savings">${r.estimated_savings_wh.toFixed(0)} Wh estimated savings</p>
          <p class="muted">${r.rationale}</p>
        </article>`).join("");
    results.innerHTML = `
      <div class="card"><h3>Assistant summary</h3>
        <p id="narrative">${narrative}</p></div>
      <div class="rec-row">${cards}</div>
      <div class="card" id="plot-card"><h3>${plot.title}</h3></div>
    `;
    const plotCard = getElement<HTMLElement>(results, "#plot-card");
    for (const series of plot.series) {
      const caption = document.createElement("p");
      caption.className = "muted";
      caption.textContent = series.name;
      plotCard.appendChild(caption);
      plotCard.appendChild(lineChart(series.points, {
        label: series.name,
        unit: series.unit,
        width: 720,
        annotations: plot.annotations.map((w) => ({
          start: w.start_ts, end: w.end_ts,
        })),
      }));
    }
  }

  render(_snapshot: Snapshot): void {
    // nothing poll-driven; results persist until the next upload
  }
}
