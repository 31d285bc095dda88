/**
 * Digital twin tab: live charts for every telemetry channel with threshold
 * bands overlaid, a history range picker, and the device panel. Bands redraw
 * from the snapshot's thresholds on every poll.
 */

import { lineChart } from "../charts.js";
import type { ViewContext } from "../context.js";
import type { Reading, Snapshot } from "../types.js";
import { fmtSimTime, getElement } from "../util.js";

const DEFAULT_RANGE_S = 3 * 3600;

interface ChannelSpec {
  key: keyof Reading;
  label: string;
  unit: string;
  band?: (t: Record<string, number>) => { min: number; max: number };
}

const CHANNELS: ChannelSpec[] = [
  { key: "temperature_c", label: "Temperature", unit: "°C",
    band: (t) => ({ min: t.min_temperature, max: t.max_temperature }) },
  { key: "humidity_pct", label: "Humidity", unit: "%RH",
    band: (t) => ({ min: t.min_humidity, max: t.max_humidity }) },
  { key: "lux", label: "Illuminance", unit: " lx",
    band: (t) => ({ min: t.min_lux_level, max: t.max_lux_level }) },
  { key: "gas_ppm", label: "Gas", unit: " ppm",
    band: (t) => ({ min: t.min_co_level, max: t.max_co_level }) },
  { key: "occupancy", label: "Occupancy", unit: "" },
  { key: "power_w", label: "Power", unit: " W" },
];

export class TwinView {
  readonly name = "DigitalTwin";
  private container!: HTMLElement;
  private range: { from: number; to: number } | null = null;

  constructor(private readonly ctx: ViewContext) {}

  mount(container: HTMLElement): void {
    this.container = container;
    container.innerHTML = `
      <form class="card form inline" id="range-form">
        <label>From (s) <input name="from" type="number" min="0"></label>
        <label>To (s) <input name="to" type="number" min="0"></label>
        <button type="submit">Load range</button>
        <button type="button" id="range-reset">Live</button>
        <span class="muted" id="range-label"></span>
      </form>
      <div id="charts" class="charts"></div>
      <div id="devices" class="card"></div>
    `;
    getElement<HTMLFormElement>(container, "#range-form")
      .addEventListener("submit", (event) => {
        event.preventDefault();
        const data = new FormData(event.currentTarget as HTMLFormElement);
        this.range = {
          from: Number(data.get("from") || 0),
          to: Number(data.get("to") || 0),
        };
        void this.ctx.refresh();
      });
    getElement<HTMLButtonElement>(container, "#range-reset")
      .addEventListener("click", () => {
        this.range = null;
        void this.ctx.refresh();
      });
  }

  async render(snapshot: Snapshot): Promise<void> {
    const now = snapshot.latest_reading.ts;
    const from = this.range ? this.range.from : Math.max(0, now - DEFAULT_RANGE_S);
    const to = this.range ? this.range.to : now + 1;
    getElement<HTMLElement>(this.container, "#range-label").textContent =
      `${fmtSimTime(from)} → ${fmtSimTime(to)} · sim now ${fmtSimTime(now)}`;

    let readings: Reading[] = [];
    try {
      readings = (await this.ctx.api.history(from, to)).readings;
    } catch (error) {
      this.ctx.toast(String(error));
    }

    const charts = getElement<HTMLElement>(this.container, "#charts");
    charts.replaceChildren();
    for (const spec of CHANNELS) {
      const figure = document.createElement("figure");
      figure.dataset.channel = String(spec.key);
      const caption = document.createElement("figcaption");
      caption.textContent = spec.label;
      const points = readings.map(
        (r) => [r.ts, Number(r[spec.key])] as [number, number]);
      figure.appendChild(caption);
      figure.appendChild(lineChart(points, {
        label: spec.label,
        unit: spec.unit,
        band: spec.band ? spec.band(snapshot.thresholds) : undefined,
      }));
      charts.appendChild(figure);
    }

    const devices = snapshot.latest_reading.devices ?? {};
    getElement<HTMLElement>(this.container, "#devices").innerHTML = `
      <h3>Devices</h3>
      <div class="device-row">${Object.entries(devices).map(([name, d]) => `
        <span class="device ${d.powered ? "on" : "off"}">
          ${name}: ${d.powered ? `level ${d.level}` : "off"}
        </span>`).join("")}
      </div>
      <h3>Comfort thresholds</h3>
      <div class="threshold-cards">${Object.entries(snapshot.thresholds)
        .map(([field, value]) => `
        <span class="threshold" data-field="${field}">
          ${field.replaceAll("_", " ")}: <strong>${value}</strong>
        </span>`).join("")}
      </div>
    `;
  }
}
