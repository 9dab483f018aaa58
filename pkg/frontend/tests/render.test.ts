import { describe, expect, it } from "vitest";

import { LocationPoint } from "../src/api.js";
import { depthColor, diffColor, dryColor } from "../src/colors.js";
import { RenderError, layoutDepthMarkers, layoutDiffMarkers, legendText } from "../src/render.js";

const VP = { width: 200, height: 100, margin: 10 };

function grid(n: number): LocationPoint[] {
  return Array.from({ length: n }, (_, i) => ({
    id: i,
    lon: (i % 5) / 5,
    lat: Math.floor(i / 5) / 5,
    segment_id: i % 3,
  }));
}

describe("depth scatter layout", () => {
  it("renders one marker per location", () => {
    const markers = layoutDepthMarkers(grid(15), Array(15).fill(0.5), 2, VP);
    expect(markers.length).toBe(15);
  });

  it("renders all-zero depths entirely dry", () => {
    const markers = layoutDepthMarkers(grid(10), Array(10).fill(0), 2, VP);
    const dry = dryColor();
    for (const m of markers) {
      expect(m.color).toEqual(dry);
      expect(m.clamped).toBe(false);
    }
  });

  it("colors a single wet location distinctly", () => {
    const depths = Array(10).fill(0);
    depths[4] = 1.0;
    const markers = layoutDepthMarkers(grid(10), depths, 2, VP);
    const wet = markers.filter((m) => JSON.stringify(m.color) !== JSON.stringify(dryColor()));
    expect(wet.length).toBe(1);
    expect(wet[0].id).toBe(4);
  });

  it("clamps depths beyond the scale max and reports it in the legend", () => {
    const depths = [0.5, 5.0];
    const locs = grid(2);
    const markers = layoutDepthMarkers(locs, depths, 2, VP);
    expect(markers[1].clamped).toBe(true);
    expect(markers[1].color).toEqual(depthColor(2, 2).color); // top color
    expect(legendText("depth", 2, true)).toContain("clamped");
  });

  it("throws a visible error on mismatched lengths", () => {
    expect(() => layoutDepthMarkers(grid(4), [1, 2], 2, VP)).toThrow(RenderError);
  });

  it("keeps north at the top", () => {
    const locs: LocationPoint[] = [
      { id: 0, lon: 0, lat: 0, segment_id: 0 },
      { id: 1, lon: 0, lat: 1, segment_id: 0 },
    ];
    const [south, north] = layoutDepthMarkers(locs, [0, 0], 1, VP);
    expect(north.y).toBeLessThan(south.y);
  });
});

describe("diverging diff scale", () => {
  it("is centered at zero", () => {
    const { color } = diffColor(0, 1);
    expect(color).toEqual({ r: 247, g: 247, b: 247 });
  });

  it("is antisymmetric in hue family", () => {
    const neg = diffColor(-0.5, 1).color;
    const pos = diffColor(0.5, 1).color;
    expect(neg.b).toBeGreaterThan(neg.r); // blue side
    expect(pos.r).toBeGreaterThan(pos.b); // red side
  });

  it("clamps beyond the bound", () => {
    expect(diffColor(3, 1).clamped).toBe(true);
    expect(diffColor(-3, 1).clamped).toBe(true);
    expect(diffColor(0.99, 1).clamped).toBe(false);
  });

  it("lays out markers with values taken verbatim", () => {
    const diff = [-0.2, 0, 0.7];
    const markers = layoutDiffMarkers(grid(3), diff, 1, VP);
    expect(markers.map((m) => m.value)).toEqual(diff);
  });
});
