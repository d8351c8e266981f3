/**
 * Revision hint for inconsistent groups: the triple of items whose answers
 * deviate most from transitivity (a_ij * a_jk should equal a_ik). Only the
 * attacker's own raw answers are inspected; no weights or consistency
 * ratios are computed here.
 */

export type AnswerLookup = (itemA: string, itemB: string) => number | undefined;

export interface TripleHint {
  items: [string, string, string];
}

export function mostInconsistentTriple(
  items: string[],
  answer: AnswerLookup,
): TripleHint | null {
  if (items.length < 3) {
    return null;
  }
  let worst: TripleHint | null = null;
  let worstDeviation = 0;
  for (let i = 0; i < items.length; i += 1) {
    for (let j = i + 1; j < items.length; j += 1) {
      for (let k = j + 1; k < items.length; k += 1) {
        const ij = answer(items[i], items[j]);
        const jk = answer(items[j], items[k]);
        const ik = answer(items[i], items[k]);
        if (ij === undefined || jk === undefined || ik === undefined) {
          continue;
        }
        const deviation = Math.abs(Math.log((ij * jk) / ik));
        if (deviation > worstDeviation) {
          worstDeviation = deviation;
          worst = { items: [items[i], items[j], items[k]] };
        }
      }
    }
  }
  return worst;
}
