import { describe, expect, it } from "vitest";

import {
  EQUAL_POSITION,
  positionLabel,
  positionToRatio,
  ratioToPosition,
  SLIDER_POSITIONS,
} from "../src/scale.js";

describe("slider scale", () => {
  it("covers the 17 admissible ratios", () => {
    const ratios = Array.from({ length: SLIDER_POSITIONS }, (_, i) => positionToRatio(i));
    const expected = [
      1 / 9, 1 / 8, 1 / 7, 1 / 6, 1 / 5, 1 / 4, 1 / 3, 1 / 2,
      1,
      2, 3, 4, 5, 6, 7, 8, 9,
    ];
    expect(ratios).toEqual(expected);
  });

  it("is a bijection between positions and ratios", () => {
    for (let position = 0; position < SLIDER_POSITIONS; position += 1) {
      expect(ratioToPosition(positionToRatio(position))).toBe(position);
    }
  });

  it("rejects off-scale inputs", () => {
    expect(() => positionToRatio(17)).toThrow(RangeError);
    expect(() => positionToRatio(-1)).toThrow(RangeError);
    expect(() => positionToRatio(8.5)).toThrow(RangeError);
    expect(() => ratioToPosition(2.5)).toThrow(RangeError);
  });

  it("labels the midpoint and both directions", () => {
    expect(positionLabel(EQUAL_POSITION, "A", "B")).toBe("equally important");
    expect(positionLabel(16, "A", "B")).toBe("A by 9");
    expect(positionLabel(0, "A", "B")).toBe("B by 9");
    expect(positionLabel(7, "A", "B")).toBe("B by 2");
  });
});
