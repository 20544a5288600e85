// Minimal SVG line chart for VE(t) curves with horizontal guide lines for
// asymptotic limits. Pure string builders so the geometry is unit-testable.

export interface ChartSeries {
  label: string;
  times: number[];
  values: number[];
  color: string;
}

export interface GuideLine {
  label: string;
  value: number;
  color: string;
}

export interface ChartLayout {
  width: number;
  height: number;
  margin: number;
}

export const DEFAULT_LAYOUT: ChartLayout = { width: 640, height: 320, margin: 42 };

export interface Scale {
  tMin: number;
  tMax: number;
  vMin: number;
  vMax: number;
}

export function computeScale(series: ChartSeries[], guides: GuideLine[]): Scale {
  const times = series.flatMap((s) => s.times);
  const values = [...series.flatMap((s) => s.values), ...guides.map((g) => g.value)];
  const tMin = Math.min(...times);
  const tMax = Math.max(...times);
  let vMin = Math.min(...values);
  let vMax = Math.max(...values);
  if (vMax - vMin < 1e-9) {
    vMin -= 0.05;
    vMax += 0.05;
  }
  const pad = 0.06 * (vMax - vMin);
  return { tMin, tMax, vMin: vMin - pad, vMax: vMax + pad };
}

export function toX(t: number, scale: Scale, layout: ChartLayout): number {
  const span = scale.tMax - scale.tMin || 1;
  return layout.margin + ((t - scale.tMin) / span) * (layout.width - 2 * layout.margin);
}

export function toY(v: number, scale: Scale, layout: ChartLayout): number {
  const span = scale.vMax - scale.vMin || 1;
  return (
    layout.height -
    layout.margin -
    ((v - scale.vMin) / span) * (layout.height - 2 * layout.margin)
  );
}

export function pathFor(
  series: ChartSeries,
  scale: Scale,
  layout: ChartLayout = DEFAULT_LAYOUT,
): string {
  return series.times
    .map((t, k) => {
      const cmd = k === 0 ? "M" : "L";
      const x = toX(t, scale, layout).toFixed(2);
      const y = toY(series.values[k], scale, layout).toFixed(2);
      return `${cmd}${x},${y}`;
    })
    .join(" ");
}

function axisTicks(lo: number, hi: number, count = 5): number[] {
  const out: number[] = [];
  for (let k = 0; k < count; k++) out.push(lo + ((hi - lo) * k) / (count - 1));
  return out;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderChart(
  series: ChartSeries[],
  guides: GuideLine[],
  layout: ChartLayout = DEFAULT_LAYOUT,
): string {
  if (series.length === 0 || series.every((s) => s.times.length === 0)) {
    return `<svg viewBox="0 0 ${layout.width} ${layout.height}"></svg>`;
  }
  const scale = computeScale(series, guides);
  const parts: string[] = [];
  parts.push(
    `<svg viewBox="0 0 ${layout.width} ${layout.height}" xmlns="http://www.w3.org/2000/svg">`,
  );
  const x0 = layout.margin;
  const x1 = layout.width - layout.margin;
  const y0 = layout.height - layout.margin;
  const y1 = layout.margin;
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" class="axis"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" class="axis"/>`,
  );
  for (const v of axisTicks(scale.vMin, scale.vMax)) {
    const y = toY(v, scale, layout).toFixed(2);
    parts.push(
      `<text x="${x0 - 6}" y="${y}" class="tick" text-anchor="end" dominant-baseline="middle">${v.toFixed(2)}</text>`,
    );
  }
  for (const t of axisTicks(scale.tMin, scale.tMax)) {
    const x = toX(t, scale, layout).toFixed(2);
    parts.push(
      `<text x="${x}" y="${y0 + 16}" class="tick" text-anchor="middle">${t.toFixed(2)}</text>`,
    );
  }
  for (const guide of guides) {
    const y = toY(guide.value, scale, layout).toFixed(2);
    parts.push(
      `<line x1="${x0}" y1="${y}" x2="${x1}" y2="${y}" stroke="${guide.color}" stroke-dasharray="6 4" class="guide"/>`,
      `<text x="${x1 + 4}" y="${y}" fill="${guide.color}" class="guide-label" dominant-baseline="middle">${esc(guide.label)}</text>`,
    );
  }
  series.forEach((s, k) => {
    parts.push(
      `<path d="${pathFor(s, scale, layout)}" fill="none" stroke="${s.color}" stroke-width="2"/>`,
      `<text x="${x0 + 8}" y="${y1 + 14 * (k + 1)}" fill="${s.color}" class="legend">${esc(s.label)}</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("");
}

// Confidence band strip for the design panel: the VE estimate with its
// expected interval drawn on a fixed [min, 1] axis.
export function renderBand(
  lower: number,
  upper: number,
  estimate: number,
  width = 640,
): string {
  const lo = Math.min(lower, 0);
  const span = 1 - lo || 1;
  const x = (v: number) => 10 + ((v - lo) / span) * (width - 20);
  return [
    `<svg viewBox="0 0 ${width} 44" xmlns="http://www.w3.org/2000/svg">`,
    `<line x1="10" y1="22" x2="${width - 10}" y2="22" class="axis"/>`,
    `<rect x="${x(lower).toFixed(2)}" y="12" width="${(x(upper) - x(lower)).toFixed(2)}" height="20" class="band"/>`,
    `<line x1="${x(estimate).toFixed(2)}" y1="6" x2="${x(estimate).toFixed(2)}" y2="38" class="band-mid"/>`,
    "</svg>",
  ].join("");
}
