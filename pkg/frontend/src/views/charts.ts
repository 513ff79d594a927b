// SVG chart renderers: measured Pareto scatter with the model front band,
// the hypervolume timeline, attribution summary, and heatmaps. Pure
// presentation over API payloads.

import { HeatmapPayload, HypervolumePayload, ParetoPayload, ShapPayload } from "../api.js";
import { extent, fmt, scale } from "../format.js";

const W = 460;
const H = 300;
const PAD = 44;

function axisFrame(xLabel: string, yLabel: string): string {
  return `
    <line x1="${PAD}" y1="${H - PAD}" x2="${W - 10}" y2="${H - PAD}" class="axis"/>
    <line x1="${PAD}" y1="${H - PAD}" x2="${PAD}" y2="10" class="axis"/>
    <text x="${(W + PAD) / 2}" y="${H - 8}" class="axis-label">${xLabel}</text>
    <text x="12" y="${(H - PAD) / 2}" class="axis-label"
          transform="rotate(-90 12 ${(H - PAD) / 2})">${yLabel}</text>`;
}

export function renderParetoChart(root: HTMLElement,
                                  payload: ParetoPayload | null): void {
  if (!payload || payload.measured.length === 0) {
    root.innerHTML = `<p class="muted">no measured points yet</p>`;
    return;
  }
  const xs = payload.measured.map((o) => o.dispersion!.mean);
  const ys = payload.measured.map((o) => o.leakage!.mean);
  const modelPts = payload.model_front ?? [];
  const [x0, x1] = extent(xs.concat(modelPts.map((p) => p.dispersion)));
  const [y0, y1] = extent(ys.concat(modelPts.map((p) => p.leakage)));
  const sx = scale(x0, x1, PAD, W - 12);
  const sy = scale(y0, y1, H - PAD, 12);

  const frontIds = new Set(payload.front.map((o) => o.id));
  const measured = payload.measured.map((o) => {
    const cx = sx(o.dispersion!.mean);
    const cy = sy(o.leakage!.mean);
    const exl = sx(o.dispersion!.mean - o.dispersion!.std);
    const exr = sx(o.dispersion!.mean + o.dispersion!.std);
    const eyt = sy(o.leakage!.mean + o.leakage!.std);
    const eyb = sy(o.leakage!.mean - o.leakage!.std);
    const cls = frontIds.has(o.id) ? "pt front" : "pt";
    return `
      <line x1="${exl}" y1="${cy}" x2="${exr}" y2="${cy}" class="errbar"/>
      <line x1="${cx}" y1="${eyt}" x2="${cx}" y2="${eyb}" class="errbar"/>
      <circle cx="${cx}" cy="${cy}" r="4" class="${cls}">
        <title>#${o.id}: ${fmt(o.dispersion!.mean, 2)}, ${fmt(o.leakage!.mean, 2)}</title>
      </circle>`;
  }).join("");

  let band = "";
  let frontLine = "";
  if (modelPts.length > 0) {
    const upper = modelPts.map((p) =>
      `${sx(p.dispersion)},${sy(p.leakage + p.leakage_std)}`);
    const lower = [...modelPts].reverse().map((p) =>
      `${sx(p.dispersion)},${sy(p.leakage - p.leakage_std)}`);
    band = `<polygon points="${upper.concat(lower).join(" ")}" class="band"/>`;
    frontLine = `<polyline points="${modelPts.map((p) =>
      `${sx(p.dispersion)},${sy(p.leakage)}`).join(" ")}" class="model-front"/>`;
  }

  root.innerHTML = `
    <svg viewBox="0 0 ${W} ${H}" role="img" aria-label="Pareto chart">
      ${axisFrame("C-f dispersion ratio", "|log leakage|")}
      ${band}${frontLine}${measured}
    </svg>
    <p class="muted">hypervolume ${fmt(payload.hypervolume, 4)}
       (ref ${payload.ref[0]}, ${payload.ref[1]}) —
       filled points are the measured front; shaded band is the model front
       ± one std</p>`;
}

export function renderHypervolumeChart(root: HTMLElement,
                                       payload: HypervolumePayload | null): void {
  if (!payload || payload.hypervolume.length === 0) {
    root.innerHTML = `<p class="muted">no history yet</p>`;
    return;
  }
  const hv = payload.hypervolume;
  const sx = scale(0, Math.max(hv.length - 1, 1), PAD, W - 12);
  const [y0, y1] = extent(hv.concat([0]));
  const sy = scale(y0, y1, H - PAD, 12);
  const line = hv.map((v, k) => `${sx(k)},${sy(v)}`).join(" ");
  const dots = hv.map((v, k) =>
    `<circle cx="${sx(k)}" cy="${sy(v)}" r="4" class="pt">
       <title>round ${k}: ${fmt(v, 4)}</title></circle>`).join("");
  const ticks = hv.map((_, k) =>
    `<text x="${sx(k)}" y="${H - PAD + 16}" class="tick">${k}</text>`).join("");
  root.innerHTML = `
    <svg viewBox="0 0 ${W} ${H}" role="img" aria-label="hypervolume history">
      ${axisFrame("round", "dominated hypervolume")}
      <polyline points="${line}" class="hv-line"/>${dots}${ticks}
    </svg>`;
}

export function renderShapSummary(root: HTMLElement,
                                  payload: ShapPayload | null): void {
  if (!payload) {
    root.innerHTML = `<p class="muted">needs at least two measured points</p>`;
    return;
  }
  const maxAbs = Math.max(...payload.ranking.map((n) => payload.mean_abs_phi[n]), 1e-12);
  const rows = payload.ranking.map((name) => {
    const v = payload.mean_abs_phi[name];
    const pts = payload.scatter.filter((s) => s.feature === name);
    const strip = pts.map((s) => {
      const x = 210 + s.feature_value_normalized * 180;
      const hue = s.phi >= 0 ? "pos" : "neg";
      return `<circle cx="${x}" cy="12" r="3.5" class="shap-dot ${hue}">
        <title>#${s.id} ${name}=${fmt(s.feature_value, 2)} phi=${fmt(s.phi)}</title>
      </circle>`;
    }).join("");
    return `
      <div class="shap-row">
        <span class="shap-name">${name}</span>
        <svg viewBox="0 0 400 24" class="shap-strip">
          <rect x="0" y="6" width="${(v / maxAbs) * 180}" height="12" class="shap-bar"/>
          ${strip}
        </svg>
        <span class="shap-value">${fmt(v)}</span>
      </div>`;
  }).join("");
  root.innerHTML = `
    <p class="muted">${payload.target} model — features ranked by mean |phi|;
       dot position is the normalized feature value, color the sign of its
       contribution</p>
    ${rows}`;
}

function heatRows(grid: number[][], lo: number, hi: number): string {
  const n = grid.length;
  const m = grid[0].length;
  const cw = 360 / n;
  const ch = 240 / m;
  const cells: string[] = [];
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < m; j++) {
      const t = hi > lo ? (grid[i][j] - lo) / (hi - lo) : 0.5;
      const hue = 240 - 240 * t;  // blue (low) to red (high)
      cells.push(`<rect x="${i * cw}" y="${240 - (j + 1) * ch}"
        width="${cw + 0.5}" height="${ch + 0.5}"
        fill="hsl(${hue} 70% 55%)"><title>${fmt(grid[i][j])}</title></rect>`);
    }
  }
  return cells.join("");
}

export function renderHeatmaps(root: HTMLElement, acq: HeatmapPayload | null,
                               constraint: HeatmapPayload | null,
                               names: string[]): void {
  if (!acq || !acq.raw) {
    root.innerHTML = `<p class="muted">needs at least two measured points</p>`;
    return;
  }
  const [i, j] = acq.pair;
  const flat = (g: number[][]) => g.flat();
  const panels: { title: string; grid: number[][] }[] = [
    { title: "acquisition (raw)", grid: acq.raw },
  ];
  if (acq.constrained) {
    panels.push({ title: "acquisition × feasibility", grid: acq.constrained });
  }
  if (constraint?.p_constraint) {
    panels.push({ title: "feasibility probability", grid: constraint.p_constraint });
  }
  // shared scale across the two acquisition panels so suppression is visible
  const acqValues = flat(acq.raw).concat(acq.constrained ? flat(acq.constrained) : []);
  const [alo, ahi] = [Math.min(...acqValues), Math.max(...acqValues)];
  const html = panels.map((p) => {
    const isP = p.title.startsWith("feasibility");
    const lo = isP ? 0 : alo;
    const hi = isP ? 1 : ahi;
    return `
      <figure class="heat">
        <figcaption>${p.title}</figcaption>
        <svg viewBox="0 0 360 240">${heatRows(p.grid, lo, hi)}</svg>
        <span class="muted">${names[i]} → / ${names[j]} ↑</span>
      </figure>`;
  }).join("");
  root.innerHTML = `<div class="heat-row">${html}</div>`;
}
