// Scatter heatmap of discrete nearshore locations. Layout and painting
// are split so the marker math stays testable without a DOM.

import { LocationPoint } from "./api.js";
import { depthColor, diffColor, dryColor, Rgb, rgbCss } from "./colors.js";

export interface Marker {
  id: number;
  x: number;
  y: number;
  color: Rgb;
  value: number;
  clamped: boolean;
}

export interface Viewport {
  width: number;
  height: number;
  margin: number;
}

export class RenderError extends Error {}

function projector(locations: LocationPoint[], vp: Viewport) {
  let lonMin = Infinity, lonMax = -Infinity, latMin = Infinity, latMax = -Infinity;
  for (const loc of locations) {
    lonMin = Math.min(lonMin, loc.lon);
    lonMax = Math.max(lonMax, loc.lon);
    latMin = Math.min(latMin, loc.lat);
    latMax = Math.max(latMax, loc.lat);
  }
  const lonSpan = lonMax - lonMin || 1;
  const latSpan = latMax - latMin || 1;
  const w = vp.width - 2 * vp.margin;
  const h = vp.height - 2 * vp.margin;
  return (loc: LocationPoint) => ({
    x: vp.margin + ((loc.lon - lonMin) / lonSpan) * w,
    y: vp.margin + ((latMax - loc.lat) / latSpan) * h, // north at the top
  });
}

/** One colored marker per location, colored by predicted depth. */
export function layoutDepthMarkers(
  locations: LocationPoint[],
  depths: number[],
  scaleMax: number,
  vp: Viewport,
): Marker[] {
  if (locations.length !== depths.length) {
    throw new RenderError(`got ${depths.length} depths for ${locations.length} locations`);
  }
  const project = projector(locations, vp);
  return locations.map((loc, i) => {
    const { color, clamped } = depthColor(depths[i], scaleMax);
    const { x, y } = project(loc);
    return { id: loc.id, x, y, color, value: depths[i], clamped };
  });
}

/** Signed-difference markers on a diverging scale centered at zero. */
export function layoutDiffMarkers(
  locations: LocationPoint[],
  diff: number[],
  scaleBound: number,
  vp: Viewport,
): Marker[] {
  if (locations.length !== diff.length) {
    throw new RenderError(`got ${diff.length} diff values for ${locations.length} locations`);
  }
  const project = projector(locations, vp);
  return locations.map((loc, i) => {
    const { color, clamped } = diffColor(diff[i], scaleBound);
    const { x, y } = project(loc);
    return { id: loc.id, x, y, color, value: diff[i], clamped };
  });
}

export function paintMarkers(ctx: CanvasRenderingContext2D, markers: Marker[], radius = 3): void {
  ctx.fillStyle = rgbCss(dryColor());
  for (const m of markers) {
    ctx.beginPath();
    ctx.fillStyle = rgbCss(m.color);
    ctx.arc(m.x, m.y, radius, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export function legendText(kind: "depth" | "diff", bound: number, anyClamped: boolean): string {
  const unit = kind === "depth" ? `0 (dry) to ${bound.toFixed(2)} m` : `±${bound.toFixed(2)} m about 0`;
  return anyClamped ? `${unit} (values beyond range clamped)` : unit;
}
