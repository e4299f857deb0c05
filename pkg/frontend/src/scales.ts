/** Visual encodings: stroke width by road class and a diverging color scale
 * for percent volume change. */

export const WIDTH_BY_CLASS: Record<string, number> = {
  primary: 5,
  secondary: 3,
  tertiary: 2,
  other: 1,
};

export function strokeWidth(highwayClass: string): number {
  return WIDTH_BY_CLASS[highwayClass] ?? 1;
}

/** Default clamp for the diverging scale, in percent. */
export const DEFAULT_COLOR_LIMIT = 3;
/** Expanded clamp available from the UI, in percent. */
export const EXPANDED_COLOR_LIMIT = 5;

const NEG: [number, number, number] = [33, 102, 172]; // deep blue (decrease)
const MID: [number, number, number] = [247, 247, 247]; // neutral
const POS: [number, number, number] = [178, 24, 43]; // deep red (increase)

function lerp(a: [number, number, number], b: [number, number, number], t: number): string {
  const c = a.map((v, i) => Math.round(v + (b[i] - v) * t));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

/**
 * Map a percent change to a diverging blue/white/red color. Values outside
 * [-limit, +limit] clamp to the endpoint colors; null (undefined base
 * volume) renders neutral grey.
 */
export function colorForPercentChange(
  pct: number | null,
  limit: number = DEFAULT_COLOR_LIMIT,
): string {
  if (pct === null || Number.isNaN(pct)) return "rgb(160,160,160)";
  const t = Math.max(-1, Math.min(1, pct / limit));
  return t < 0 ? lerp(MID, NEG, -t) : lerp(MID, POS, t);
}
