// Color scales for the depth heatmap (sequential) and the scenario
// difference view (diverging, centered at zero). Values beyond the
// configured bounds clamp to the end colors and the legend reports it.

export interface Rgb {
  r: number;
  g: number;
  b: number;
}

export interface ScaleSample {
  color: Rgb;
  clamped: boolean;
}

const DRY: Rgb = { r: 225, g: 225, b: 225 };

function lerp(a: number, b: number, t: number): number {
  return Math.round(a + (b - a) * t);
}

function mix(a: Rgb, b: Rgb, t: number): Rgb {
  return { r: lerp(a.r, b.r, t), g: lerp(a.g, b.g, t), b: lerp(a.b, b.b, t) };
}

const SHALLOW: Rgb = { r: 116, g: 173, b: 209 };
const DEEP: Rgb = { r: 49, g: 54, b: 149 };
const NEG: Rgb = { r: 33, g: 102, b: 172 };
const POS: Rgb = { r: 178, g: 24, b: 43 };
const MID: Rgb = { r: 247, g: 247, b: 247 };

export function rgbCss(c: Rgb): string {
  return `rgb(${c.r}, ${c.g}, ${c.b})`;
}

export function dryColor(): Rgb {
  return { ...DRY };
}

/** Sequential scale for non-negative depths; exact zero renders dry. */
export function depthColor(depth: number, maxDepth: number): ScaleSample {
  if (depth === 0) {
    return { color: dryColor(), clamped: false };
  }
  const bound = maxDepth > 0 ? maxDepth : 1;
  const t = depth / bound;
  if (t >= 1) {
    return { color: { ...DEEP }, clamped: t > 1 };
  }
  return { color: mix(SHALLOW, DEEP, Math.max(t, 0)), clamped: false };
}

/** Diverging scale for signed differences, centered at zero. */
export function diffColor(value: number, bound: number): ScaleSample {
  const limit = bound > 0 ? bound : 1;
  const t = value / limit;
  if (t <= -1) return { color: { ...NEG }, clamped: t < -1 };
  if (t >= 1) return { color: { ...POS }, clamped: t > 1 };
  return { color: t < 0 ? mix(MID, NEG, -t) : mix(MID, POS, t), clamped: false };
}
