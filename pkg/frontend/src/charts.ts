/**
 * Hand-rolled SVG line charts. Values are plotted exactly as the service
 * reported them; the only arithmetic here is pixel scaling.
 */

const SVG_NS = "http://www.w3.org/2000/svg";

export interface Band {
  min?: number;
  max?: number;
}

export interface Annotation {
  start: number;
  end: number;
}

export interface ChartOptions {
  width?: number;
  height?: number;
  label?: string;
  unit?: string;
  band?: Band;
  annotations?: Annotation[];
}

interface Scale {
  x: (t: number) => number;
  y: (v: number) => number;
}

function makeScale(points: [number, number][], band: Band | undefined,
                   width: number, height: number, pad: number): Scale {
  const xs = points.map((p) => p[0]);
  const ys = points.map((p) => p[1]);
  if (band?.min !== undefined) ys.push(band.min);
  if (band?.max !== undefined) ys.push(band.max);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  let yMin = Math.min(...ys);
  let yMax = Math.max(...ys);
  if (yMin === yMax) {
    yMin -= 1;
    yMax += 1;
  }
  // margin keeps band edges off the viewport edge so threshold changes are
  // visible as movement, not just a silent rescale
  const margin = (yMax - yMin) * 0.08;
  yMin -= margin;
  yMax += margin;
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin;
  return {
    x: (t) => pad + ((t - xMin) / xSpan) * (width - 2 * pad),
    y: (v) => height - pad - ((v - yMin) / ySpan) * (height - 2 * pad),
  };
}

function el<K extends keyof SVGElementTagNameMap>(
    tag: K, attrs: Record<string, string | number>): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

/** A single-series line chart with an optional threshold band and shaded
 * time-window annotations. */
export function lineChart(points: [number, number][],
                          options: ChartOptions = {}): SVGSVGElement {
  const width = options.width ?? 560;
  const height = options.height ?? 150;
  const pad = 14;
  const svg = el("svg", {
    viewBox: `0 0 ${width} ${height}`,
    width, height,
    class: "chart",
    role: "img",
  });
  if (options.label) {
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = options.label;
    svg.appendChild(title);
  }
  if (points.length === 0) {
    const empty = el("text", { x: width / 2, y: height / 2, class: "chart-empty",
                               "text-anchor": "middle" });
    empty.textContent = "no data";
    svg.appendChild(empty);
    return svg;
  }

  const scale = makeScale(points, options.band, width, height, pad);

  for (const window of options.annotations ?? []) {
    const x0 = scale.x(window.start);
    const x1 = scale.x(window.end);
    svg.appendChild(el("rect", {
      x: x0, y: pad, width: Math.max(1, x1 - x0), height: height - 2 * pad,
      class: "annotation",
    }));
  }

  const band = options.band;
  if (band && band.min !== undefined && band.max !== undefined) {
    const yTop = scale.y(band.max);
    const yBottom = scale.y(band.min);
    svg.appendChild(el("rect", {
      x: pad, y: yTop, width: width - 2 * pad,
      height: Math.max(1, yBottom - yTop),
      class: "band",
      "data-min": band.min, "data-max": band.max,
    }));
  }

  const path = points
    .map((p) => `${scale.x(p[0]).toFixed(2)},${scale.y(p[1]).toFixed(2)}`)
    .join(" ");
  svg.appendChild(el("polyline", { points: path, class: "series", fill: "none" }));

  const last = points[points.length - 1];
  const value = el("text", {
    x: width - pad, y: pad + 4, class: "chart-value", "text-anchor": "end",
  });
  value.textContent = `${last[1].toFixed(1)}${options.unit ?? ""}`;
  svg.appendChild(value);
  return svg;
}
