// What-if card: model prediction and feasibility at an arbitrary condition.

import { fmt } from "../format.js";
import { ViewModel, parseNumber } from "../state.js";

export function renderWhatIf(root: HTMLElement, vm: ViewModel,
                             onQuery: (condition: number[]) => void): void {
  if (!vm.campaign) {
    root.innerHTML = "";
    return;
  }
  const names = vm.campaign.space.map((p) => p.name);
  const inputs = vm.campaign.space.map((p, k) => `
    <label>${p.name} <span class="muted">[${p.min}–${p.max}${p.unit ? " " + p.unit : ""}]</span>
      <input data-whatif-dim="${k}" size="6" value="${vm.whatIfResult
        ? vm.whatIfResult.condition[k] : ""}">
    </label>`).join("");

  const r = vm.whatIfResult;
  const card = r ? `
    <div class="whatif-card">
      <div>dispersion: <strong>${fmt(r.dispersion.mean, 3)}</strong>
           ± ${fmt(r.dispersion.std, 3)}</div>
      <div>leakage: <strong>${fmt(r.leakage.mean, 3)}</strong>
           ± ${fmt(r.leakage.std, 3)}</div>
      <div>feasibility p:
           <strong>${r.p_constraint === undefined ? "-" : fmt(r.p_constraint, 4)}</strong></div>
    </div>` : "";

  root.innerHTML = `
    <form class="whatif-form">${inputs}
      <button type="submit">predict</button>
    </form>
    ${card}
    ${vm.lastError ? `<p class="error">${vm.lastError}</p>` : ""}`;

  root.querySelector("form")?.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const values: number[] = [];
    for (let k = 0; k < names.length; k++) {
      const el = root.querySelector<HTMLInputElement>(`input[data-whatif-dim="${k}"]`);
      const v = el ? parseNumber(el.value) : null;
      if (v === null) return;
      values.push(v);
    }
    onQuery(values);
  });
}
