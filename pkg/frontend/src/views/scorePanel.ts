// Score and measurement entry for the pending round.

import { ObservationPayload } from "../api.js";
import { conditionText, fmtMeasurement, labelText } from "../format.js";
import { SCORE_LABELS, ViewModel, needsMeasurements } from "../state.js";

export interface ScorePanelHandlers {
  onScore(id: string): void;
  onMeasure(id: string): void;
  onSuggest(): void;
}

export function renderScorePanel(root: HTMLElement, vm: ViewModel,
                                 handlers: ScorePanelHandlers): void {
  const round = vm.pendingRound();
  const names = vm.campaign?.space.map((p) => p.name) ?? [];
  const mutable = vm.canMutate();

  if (!vm.campaign) {
    root.innerHTML = `<p class="muted">connecting…</p>`;
    return;
  }
  if (!round) {
    root.innerHTML = `
      <p>No pending round: every suggested condition is resolved.</p>
      <button id="suggest-btn" ${mutable ? "" : "disabled"}>
        ${vm.suggestInFlight ? "suggesting…" : "Suggest next batch"}
      </button>`;
    root.querySelector("#suggest-btn")
      ?.addEventListener("click", () => handlers.onSuggest());
    return;
  }

  const rows = round.suggested.map((id) => {
    const obs = vm.observation(id);
    if (!obs) return "";
    const form = vm.form(id);
    const scoreOptions = SCORE_LABELS.map((l) =>
      `<option value="${l}" ${form.label === l ? "selected" : ""}>
         ${labelText(l)}</option>`).join("");
    const measureCells = needsMeasurements(obs)
      ? `<input data-field="dispersionMean" data-id="${id}" placeholder="C ratio mean" value="${form.dispersionMean}" size="6">
         <input data-field="dispersionStd" data-id="${id}" placeholder="std" value="${form.dispersionStd}" size="4">
         <input data-field="leakageMean" data-id="${id}" placeholder="|log I| mean" value="${form.leakageMean}" size="6">
         <input data-field="leakageStd" data-id="${id}" placeholder="std" value="${form.leakageStd}" size="4">
         <label><input type="checkbox" data-field="unmeasurable" data-id="${id}"
                ${form.unmeasurable ? "checked" : ""}> unmeasurable</label>
         <button data-measure="${id}" ${mutable && !form.busy ? "" : "disabled"}>record</button>`
      : obs.dispersion
        ? `<span>${fmtMeasurement(obs.dispersion)} / ${fmtMeasurement(obs.leakage)}</span>`
        : obs.unmeasurable ? `<span class="muted">unmeasurable</span>`
          : `<span class="muted">n/a</span>`;
    return `
      <tr>
        <td><strong>${obs.id}</strong></td>
        <td class="cond">${conditionText(obs.condition, names)}</td>
        <td>
          <select data-score="${id}" ${mutable && !form.busy ? "" : "disabled"}>
            <option value="">score…</option>${scoreOptions}
          </select>
          <span class="current">${obs.label ? labelText(obs.label) : ""}</span>
        </td>
        <td>${measureCells}</td>
        <td class="error">${form.error ?? ""}</td>
      </tr>`;
  }).join("");

  root.innerHTML = `
    <h3>Round ${round.index} — ${round.strategy}${round.hitl_enabled ? " + feasibility" : ""}
        <span class="pill">${round.status}</span></h3>
    <table class="score-table">
      <thead><tr><th>id</th><th>condition</th><th>conversion</th>
                 <th>measurements</th><th></th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;

  root.querySelectorAll<HTMLSelectElement>("select[data-score]").forEach((el) => {
    el.addEventListener("change", () => {
      const id = el.dataset.score!;
      vm.form(id).label = el.value as typeof SCORE_LABELS[number] | "";
      if (el.value) handlers.onScore(id);
    });
  });
  root.querySelectorAll<HTMLInputElement>("input[data-field]").forEach((el) => {
    el.addEventListener("change", () => {
      const form = vm.form(el.dataset.id!);
      const field = el.dataset.field!;
      if (field === "unmeasurable") form.unmeasurable = el.checked;
      else (form as unknown as Record<string, string>)[field] = el.value;
    });
  });
  root.querySelectorAll<HTMLButtonElement>("button[data-measure]").forEach((el) => {
    el.addEventListener("click", () => handlers.onMeasure(el.dataset.measure!));
  });
}
