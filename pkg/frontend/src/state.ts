/**
 * Questionnaire flow state. One page per sibling group of the taxonomy,
 * metric (leaf) groups first and category levels afterwards, deepest first.
 * All consistency ratios and weights are taken verbatim from service
 * responses; the flow only tracks answers and page status.
 */

import {
  ApiClient,
  ApiError,
  GroupInfo,
  HierarchyNode,
  JudgmentResult,
} from "./api.js";
import { mostInconsistentTriple, TripleHint } from "./hints.js";
import { positionToRatio } from "./scale.js";

export const CR_GATE = 0.1;

export type Badge = "pending" | "green" | "red";

export interface PageState {
  info: GroupInfo;
  isLeafGroup: boolean;
  answers: Map<string, number>; // "a|b" -> ratio (as answered, A relative to B)
  complete: boolean;
  cr: number | null;
  weights: Record<string, number> | null;
  reopened: boolean;
}

export interface SummaryBar {
  leaf: string;
  weight: number;
}

function pairKey(itemA: string, itemB: string): string {
  return `${itemA}|${itemB}`;
}

function leafGroupPaths(root: HierarchyNode): Set<string> {
  const leafGroups = new Set<string>();
  const walk = (node: HierarchyNode, path: string): void => {
    const children = node.children ?? [];
    if (children.length >= 2 && children.every((c) => !(c.children ?? []).length)) {
      leafGroups.add(path);
    }
    for (const child of children) {
      walk(child, `${path}/${child.name}`);
    }
  };
  walk(root, root.name);
  return leafGroups;
}

export function orderPages(root: HierarchyNode, groups: GroupInfo[]): GroupInfo[] {
  const leafy = leafGroupPaths(root);
  const depth = (g: GroupInfo) => g.path.split("/").length;
  const leafPages = groups.filter((g) => leafy.has(g.path));
  const categoryPages = groups
    .filter((g) => !leafy.has(g.path))
    .sort((a, b) => depth(b) - depth(a));
  return [...leafPages, ...categoryPages];
}

export class QuestionnaireFlow {
  pages: PageState[] = [];
  sessionId: string | null = null;
  expertId = "";
  status = "open";
  private leafGroups = new Set<string>();

  constructor(private readonly api: ApiClient) {}

  /** Load the taxonomy and open (or resume) a session. */
  async start(expertId: string, resumeSessionId?: string): Promise<void> {
    const hierarchy = await this.api.getHierarchy();
    this.leafGroups = leafGroupPaths(hierarchy.hierarchy);
    this.pages = orderPages(hierarchy.hierarchy, hierarchy.groups).map((info) => ({
      info,
      isLeafGroup: this.leafGroups.has(info.path),
      answers: new Map(),
      complete: false,
      cr: null,
      weights: null,
      reopened: false,
    }));
    if (resumeSessionId) {
      await this.resume(resumeSessionId);
      return;
    }
    const session = await this.api.createSession(expertId);
    this.sessionId = session.session_id;
    this.expertId = expertId;
    this.status = session.status;
  }

  private async resume(sessionId: string): Promise<void> {
    const state = await this.api.getSession(sessionId);
    this.sessionId = state.session_id;
    this.expertId = state.expert_id;
    this.status = state.status;
    for (const page of this.pages) {
      const group = state.groups[page.info.path];
      if (!group) {
        continue;
      }
      for (const j of group.judgments) {
        page.answers.set(pairKey(j.item_a, j.item_b), j.ratio);
      }
      page.complete = group.complete;
      page.cr = group.cr;
      page.weights = group.weights;
    }
  }

  page(path: string): PageState {
    const page = this.pages.find((p) => p.info.path === path);
    if (!page) {
      throw new Error(`unknown questionnaire page: ${path}`);
    }
    return page;
  }

  /** Answer one card; the returned state carries the service's CR/weights. */
  async answer(
    path: string,
    itemA: string,
    itemB: string,
    sliderPosition: number,
  ): Promise<JudgmentResult> {
    if (!this.sessionId) {
      throw new Error("session not started");
    }
    const ratio = positionToRatio(sliderPosition);
    const result = await this.api.putJudgment(this.sessionId, {
      group: path,
      item_a: itemA,
      item_b: itemB,
      ratio,
    });
    const page = this.page(path);
    page.answers.set(pairKey(itemA, itemB), ratio);
    page.complete = result.complete;
    page.cr = result.cr;
    page.weights = result.weights;
    this.status = result.status;
    return result;
  }

  badge(path: string): Badge {
    const page = this.page(path);
    if (!page.complete || page.cr === null) {
      return "pending";
    }
    return page.cr < CR_GATE ? "green" : "red";
  }

  /** Revision hint for a red page: the most intransitive answer triple. */
  hint(path: string): TripleHint | null {
    const page = this.page(path);
    if (this.badge(path) !== "red") {
      return null;
    }
    const items = page.info.items.map((i) => i.name);
    return mostInconsistentTriple(items, (a, b) => {
      const direct = page.answers.get(pairKey(a, b));
      if (direct !== undefined) {
        return direct;
      }
      const inverse = page.answers.get(pairKey(b, a));
      return inverse === undefined ? undefined : 1 / inverse;
    });
  }

  get submittable(): boolean {
    return this.pages.every((p) => this.badge(p.info.path) === "green");
  }

  /**
   * Submit the session. On rejection the offending pages are reopened and
   * listed in the result so the UI can navigate back to them.
   */
  async submit(): Promise<{ ok: boolean; offending: string[] }> {
    if (!this.sessionId) {
      throw new Error("session not started");
    }
    try {
      const result = await this.api.submit(this.sessionId);
      this.status = result.status;
      return { ok: true, offending: [] };
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        const detail = error.detail as { groups?: { group: string }[] };
        const offending = (detail.groups ?? []).map((g) => g.group);
        for (const path of offending) {
          this.page(path).reopened = true;
        }
        return { ok: false, offending };
      }
      throw error;
    }
  }

  /** Server-computed leaf weights of this expert, heaviest first. */
  async summary(): Promise<SummaryBar[]> {
    if (!this.sessionId) {
      throw new Error("session not started");
    }
    const aggregate = await this.api.aggregate([this.sessionId]);
    const leaves = aggregate.weight_model.global_leaf_weights;
    return Object.entries(leaves)
      .map(([leaf, weight]) => ({ leaf, weight }))
      .sort((a, b) => b.weight - a.weight || a.leaf.localeCompare(b.leaf));
  }
}
