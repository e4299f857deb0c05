import { describe, expect, it } from "vitest";

import {
  colorForPercentChange,
  DEFAULT_COLOR_LIMIT,
  EXPANDED_COLOR_LIMIT,
  strokeWidth,
  WIDTH_BY_CLASS,
} from "../src/scales.js";

describe("stroke widths", () => {
  it("uses the fixed width per road class", () => {
    expect(strokeWidth("primary")).toBe(5);
    expect(strokeWidth("secondary")).toBe(3);
    expect(strokeWidth("tertiary")).toBe(2);
    expect(strokeWidth("other")).toBe(1);
  });

  it("falls back to the thinnest width for unknown classes", () => {
    expect(strokeWidth("mystery")).toBe(1);
  });

  it("exposes exactly the four known classes", () => {
    expect(Object.keys(WIDTH_BY_CLASS).sort()).toEqual([
      "other",
      "primary",
      "secondary",
      "tertiary",
    ]);
  });
});

describe("diverging color scale", () => {
  it("matches golden colors at five sample percent changes", () => {
    // limit is the default +/-3%
    expect(colorForPercentChange(-3)).toBe("rgb(33,102,172)");
    expect(colorForPercentChange(-1.5)).toBe("rgb(140,175,210)");
    expect(colorForPercentChange(0)).toBe("rgb(247,247,247)");
    expect(colorForPercentChange(1.5)).toBe("rgb(213,136,145)");
    expect(colorForPercentChange(3)).toBe("rgb(178,24,43)");
  });

  it("clamps beyond the limit", () => {
    expect(colorForPercentChange(10)).toBe(colorForPercentChange(3));
    expect(colorForPercentChange(-99)).toBe(colorForPercentChange(-3));
    expect(colorForPercentChange(3.0001)).toBe("rgb(178,24,43)");
  });

  it("expands with the wider limit", () => {
    expect(DEFAULT_COLOR_LIMIT).toBe(3);
    expect(EXPANDED_COLOR_LIMIT).toBe(5);
    // 3% is no longer saturated on the +/-5% scale
    expect(colorForPercentChange(3, 5)).toBe("rgb(206,113,125)");
    expect(colorForPercentChange(5, 5)).toBe("rgb(178,24,43)");
  });

  it("renders null percent change (zero base volume) as neutral grey", () => {
    expect(colorForPercentChange(null)).toBe("rgb(160,160,160)");
  });
});
