// View model: everything the console renders, plus the mutation workflows.
// No numerics happen here beyond parsing form input; rendered values are
// verbatim API payload values.

import {
  ApiError,
  CampaignPayload,
  Client,
  HeatmapPayload,
  HypervolumePayload,
  ObservationPayload,
  ParetoPayload,
  RoundPayload,
  ShapPayload,
  WhatIfPayload,
} from "./api.js";

export const SCORE_LABELS = [
  "unconverted",
  "partially_converted",
  "converted",
  "partially_burned",
  "burned",
] as const;

export type ScoreLabel = (typeof SCORE_LABELS)[number];

export interface ConditionForm {
  label: ScoreLabel | "";
  dispersionMean: string;
  dispersionStd: string;
  leakageMean: string;
  leakageStd: string;
  unmeasurable: boolean;
  error: string | null;   // server rejection surfaced inline, verbatim
  busy: boolean;
}

export function emptyForm(): ConditionForm {
  return { label: "", dispersionMean: "", dispersionStd: "",
           leakageMean: "", leakageStd: "", unmeasurable: false,
           error: null, busy: false };
}

const FAILURE_LABELS: ReadonlySet<string> = new Set(["unconverted", "burned"]);

export function needsMeasurements(obs: ObservationPayload): boolean {
  if (!obs.label || FAILURE_LABELS.has(obs.label)) return false;
  return !obs.dispersion && !obs.unmeasurable;
}

export function roundIsResolved(round: RoundPayload): boolean {
  return round.status === "complete";
}

export interface HeatmapSelection {
  pair: [number, number];
  target: "dispersion" | "leakage";
}

export class ViewModel {
  campaign: CampaignPayload | null = null;
  pareto: ParetoPayload | null = null;
  hypervolume: HypervolumePayload | null = null;
  shap: ShapPayload | null = null;
  acqMap: HeatmapPayload | null = null;
  constraintMap: HeatmapPayload | null = null;
  whatIfResult: WhatIfPayload | null = null;

  forms = new Map<string, ConditionForm>();
  heatmap: HeatmapSelection = { pair: [0, 1], target: "dispersion" };
  shapTarget: "dispersion" | "leakage" = "dispersion";

  suggestInFlight = false;
  stale = false;            // a mutation hit a conflict; data shown may lag
  lastError: string | null = null;
  connected = false;

  constructor(private client: Client) {}

  // --------------------------------------------------------------- fetching

  async refreshCampaign(): Promise<void> {
    try {
      this.campaign = await this.client.getCampaign();
      this.connected = true;
      this.stale = false;
      for (const round of this.campaign.rounds) {
        for (const id of round.suggested) {
          if (!this.forms.has(id)) this.forms.set(id, emptyForm());
        }
      }
    } catch (err) {
      this.connected = false;
      this.lastError = describe(err);
      throw err;
    }
  }

  async refreshAnalytics(): Promise<void> {
    if (!this.campaign) return;
    if (this.campaign.functional_count >= 2) {
      this.pareto = await this.client.getPareto();
      this.hypervolume = await this.client.getHypervolume();
      this.shap = await this.client.getShap(this.shapTarget);
      this.acqMap = await this.client.getAcqMap(this.heatmap.pair,
                                                this.heatmap.target);
      if (this.campaign.scored_count >= 2) {
        this.constraintMap = await this.client.getConstraintMap(this.heatmap.pair);
      }
    } else if (this.campaign.functional_count > 0) {
      this.hypervolume = await this.client.getHypervolume();
    }
  }

  pendingRound(): RoundPayload | null {
    if (!this.campaign || this.campaign.rounds.length === 0) return null;
    const last = this.campaign.rounds[this.campaign.rounds.length - 1];
    return roundIsResolved(last) ? null : last;
  }

  observation(id: string): ObservationPayload | null {
    return this.campaign?.observations.find((o) => o.id === id) ?? null;
  }

  form(id: string): ConditionForm {
    let form = this.forms.get(id);
    if (!form) {
      form = emptyForm();
      this.forms.set(id, form);
    }
    return form;
  }

  canMutate(): boolean {
    return this.connected && !this.suggestInFlight;
  }

  // -------------------------------------------------------------- mutations

  async submitScore(id: string): Promise<boolean> {
    const form = this.form(id);
    if (!this.canMutate() || !form.label || form.busy) return false;
    form.busy = true;
    form.error = null;
    try {
      await this.client.postScore(id, form.label);
      await this.refreshCampaign();
      return true;
    } catch (err) {
      this.noteMutationFailure(form, err);
      return false;
    } finally {
      form.busy = false;
    }
  }

  async submitMeasurements(id: string): Promise<boolean> {
    const form = this.form(id);
    if (!this.canMutate() || form.busy) return false;
    form.busy = true;
    form.error = null;
    try {
      if (form.unmeasurable) {
        await this.client.postUnmeasurable(id);
      } else {
        const values = [form.dispersionMean, form.dispersionStd,
                        form.leakageMean, form.leakageStd].map(parseNumber);
        if (values.some((v) => v === null)) {
          form.error = "enter mean and std for both objectives";
          return false;
        }
        const [dm, dsd, lm, lsd] = values as number[];
        await this.client.postMeasurements(id, { mean: dm, std: dsd },
                                           { mean: lm, std: lsd });
      }
      await this.refreshCampaign();
      return true;
    } catch (err) {
      this.noteMutationFailure(form, err);
      return false;
    } finally {
      form.busy = false;
    }
  }

  async triggerSuggest(): Promise<RoundPayload | null> {
    if (!this.canMutate()) return null;
    this.suggestInFlight = true;
    this.lastError = null;
    try {
      const round = await this.client.nextRound();
      await this.refreshCampaign();
      await this.refreshAnalytics();
      return round;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) this.stale = true;
      this.lastError = describe(err);
      return null;
    } finally {
      this.suggestInFlight = false;
    }
  }

  async runWhatIf(condition: number[]): Promise<WhatIfPayload | null> {
    try {
      this.whatIfResult = await this.client.whatIf(condition);
      this.lastError = null;
      return this.whatIfResult;
    } catch (err) {
      this.lastError = describe(err);
      this.whatIfResult = null;
      return null;
    }
  }

  async selectHeatmap(selection: HeatmapSelection): Promise<void> {
    this.heatmap = selection;
    if (this.campaign && this.campaign.functional_count >= 2) {
      this.acqMap = await this.client.getAcqMap(selection.pair, selection.target);
      if (this.campaign.scored_count >= 2) {
        this.constraintMap = await this.client.getConstraintMap(selection.pair);
      }
    }
  }

  async selectShapTarget(target: "dispersion" | "leakage"): Promise<void> {
    this.shapTarget = target;
    if (this.campaign && this.campaign.functional_count >= 2) {
      this.shap = await this.client.getShap(target);
    }
  }

  private noteMutationFailure(form: ConditionForm, err: unknown): void {
    if (err instanceof ApiError) {
      form.error = err.detail;               // e.g. the 422 invariant message
      if (err.status === 409) this.stale = true;
    } else {
      form.error = describe(err);
    }
  }
}

export function parseNumber(text: string): number | null {
  const trimmed = text.trim();
  if (!trimmed) return null;
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : null;
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.detail;
  if (err instanceof Error) return err.message;
  return String(err);
}
