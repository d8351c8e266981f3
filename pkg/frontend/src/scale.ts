/**
 * The nine-level importance scale as a 17-position slider.
 *
 * Positions 0..7 favor item B (ratio 1/9 .. 1/2), position 8 is "equally
 * important", positions 9..16 favor item A (ratio 2 .. 9). The mapping is a
 * bijection: every slider position names exactly one admissible ratio.
 */

export const SLIDER_POSITIONS = 17;
export const EQUAL_POSITION = 8;

export function positionToRatio(position: number): number {
  if (!Number.isInteger(position) || position < 0 || position >= SLIDER_POSITIONS) {
    throw new RangeError(`slider position out of range: ${position}`);
  }
  if (position < EQUAL_POSITION) {
    return 1 / (9 - position);
  }
  if (position === EQUAL_POSITION) {
    return 1;
  }
  return position - 7;
}

export function ratioToPosition(ratio: number): number {
  for (let position = 0; position < SLIDER_POSITIONS; position += 1) {
    if (Math.abs(positionToRatio(position) - ratio) < 1e-9) {
      return position;
    }
  }
  throw new RangeError(`ratio is not on the nine-level scale: ${ratio}`);
}

/** Human label for a slider position, given the two item labels. */
export function positionLabel(position: number, itemA: string, itemB: string): string {
  if (position === EQUAL_POSITION) {
    return "equally important";
  }
  const ratio = positionToRatio(position);
  return ratio > 1 ? `${itemA} by ${ratio}` : `${itemB} by ${Math.round(1 / ratio)}`;
}
