// Display formatting only: the console never derives numbers, it prints them.

export function fmt(value: number | null | undefined, digits = 3): string {
  if (value === null || value === undefined || !Number.isFinite(value)) return "-";
  if (value !== 0 && (Math.abs(value) < 1e-3 || Math.abs(value) >= 1e5)) {
    return value.toExponential(2);
  }
  return value.toFixed(digits);
}

export function fmtMeasurement(m: { mean: number; std: number } | null): string {
  if (!m) return "-";
  return `${fmt(m.mean, 2)} ± ${fmt(m.std, 2)}`;
}

export function labelText(label: string | null): string {
  if (!label) return "unscored";
  return label.replace(/_/g, " ");
}

export function conditionText(values: number[], names: string[]): string {
  return values.map((v, i) => `${names[i]}=${trimZeros(v)}`).join("  ");
}

function trimZeros(v: number): string {
  return Number.isInteger(v) ? String(v) : String(Math.round(v * 1e6) / 1e6);
}

// shared linear scale for SVG layout (presentation only)
export function scale(domainMin: number, domainMax: number,
                      rangeMin: number, rangeMax: number): (v: number) => number {
  const span = domainMax - domainMin || 1;
  return (v: number) =>
    rangeMin + ((v - domainMin) / span) * (rangeMax - rangeMin);
}

export function extent(values: number[], pad = 0.05): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const margin = (hi - lo) * pad;
  return [lo - margin, hi + margin];
}
