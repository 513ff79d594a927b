// Console entry point: wires the view model to the panels and keeps a 2 s
// poll running while lab work or a suggestion is pending.

import { Client } from "./api.js";
import { ViewModel } from "./state.js";
import { renderScorePanel } from "./views/scorePanel.js";
import { renderHeatmaps, renderHypervolumeChart, renderParetoChart,
         renderShapSummary } from "./views/charts.js";
import { renderWhatIf } from "./views/whatifView.js";

const vm = new ViewModel(new Client(""));

const el = (id: string) => document.getElementById(id)!;

function renderHeader(): void {
  const status = el("status-line");
  const bits: string[] = [];
  if (!vm.connected) bits.push(`<span class="pill bad">disconnected</span>`);
  if (vm.stale) bits.push(`<span class="pill warn">stale — refreshing</span>`);
  if (vm.suggestInFlight) bits.push(`<span class="pill">suggesting…</span>`);
  if (vm.campaign) {
    bits.push(`${vm.campaign.observations.length} conditions ·
               ${vm.campaign.functional_count} measured ·
               ${vm.campaign.scored_count} scored`);
  }
  status.innerHTML = bits.join(" ");
}

function renderAll(): void {
  renderHeader();
  renderScorePanel(el("score-panel"), vm, {
    onScore: (id) => void vm.submitScore(id).then(renderAll),
    onMeasure: (id) => void vm.submitMeasurements(id).then(() =>
      refreshAnalyticsAndRender()),
    onSuggest: () => void vm.triggerSuggest().then(renderAll),
  });
  renderParetoChart(el("pareto-chart"), vm.pareto);
  renderHypervolumeChart(el("hv-chart"), vm.hypervolume);
  renderShapSummary(el("shap-panel"), vm.shap);
  renderHeatmaps(el("heatmap-panel"), vm.acqMap, vm.constraintMap,
                 vm.campaign?.space.map((p) => p.name) ?? []);
  renderWhatIf(el("whatif-panel"), vm, (condition) =>
    void vm.runWhatIf(condition).then(renderAll));
  renderSelectors();
}

function renderSelectors(): void {
  const names = vm.campaign?.space.map((p) => p.name) ?? [];
  const target = el("shap-target") as HTMLSelectElement;
  if (target.options.length === 0) {
    target.innerHTML = `<option value="dispersion">dispersion</option>
                        <option value="leakage">leakage</option>`;
    target.addEventListener("change", () =>
      void vm.selectShapTarget(target.value as "dispersion" | "leakage")
        .then(renderAll));
  }
  const pair = el("heatmap-pair") as HTMLSelectElement;
  if (pair.options.length === 0 && names.length) {
    const combos: string[] = [];
    for (let i = 0; i < names.length; i++) {
      for (let j = i + 1; j < names.length; j++) {
        combos.push(`<option value="${i},${j}">${names[i]} × ${names[j]}</option>`);
      }
    }
    pair.innerHTML = combos.join("");
    pair.addEventListener("change", () => {
      const [i, j] = pair.value.split(",").map(Number);
      void vm.selectHeatmap({ pair: [i, j], target: vm.heatmap.target })
        .then(renderAll);
    });
  }
}

async function refreshAnalyticsAndRender(): Promise<void> {
  try {
    await vm.refreshAnalytics();
  } catch {
    // analytics follow campaign data; surfaced via the retry affordance below
  }
  renderAll();
}

async function fullRefresh(): Promise<void> {
  try {
    await vm.refreshCampaign();
    await vm.refreshAnalytics();
  } catch {
    el("score-panel").innerHTML =
      `<p class="error">cannot reach the campaign service
         <button id="retry-btn">retry</button></p>`;
    document.getElementById("retry-btn")
      ?.addEventListener("click", () => void fullRefresh());
  }
  renderAll();
}

setInterval(() => {
  // poll while the lab owes data or a suggestion is running
  if (vm.suggestInFlight || vm.pendingRound() || vm.stale || !vm.connected) {
    void fullRefresh();
  }
}, 2000);

void fullRefresh();
