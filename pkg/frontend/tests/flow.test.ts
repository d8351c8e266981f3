/**
 * Flow behavior against a mocked service: page ordering, badge state,
 * submit gating and the single-source-of-truth property (every number the
 * flow exposes is exactly what the service returned).
 */

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, HierarchyPayload } from "../src/api.js";
import { orderPages, QuestionnaireFlow } from "../src/state.js";
import { formatCr } from "../src/questionnaire.js";
import { ratioToPosition } from "../src/scale.js";

const HIERARCHY: HierarchyPayload = {
  schema_version: 1,
  hierarchy: {
    name: "severity",
    label: "Severity",
    children: [
      {
        name: "cat1",
        label: "Category 1",
        children: [
          { name: "a1", label: "A1" },
          { name: "a2", label: "A2" },
          { name: "a3", label: "A3" },
        ],
      },
      {
        name: "cat2",
        label: "Category 2",
        children: [
          { name: "b1", label: "B1" },
          { name: "b2", label: "B2" },
        ],
      },
    ],
  },
  groups: [
    {
      path: "severity",
      label: "Severity",
      question: "Which aspect matters more?",
      items: [
        { name: "cat1", label: "Category 1" },
        { name: "cat2", label: "Category 2" },
      ],
      pairs: 1,
    },
    {
      path: "severity/cat1",
      label: "Category 1",
      question: "Which is harder to obtain?",
      items: [
        { name: "a1", label: "A1" },
        { name: "a2", label: "A2" },
        { name: "a3", label: "A3" },
      ],
      pairs: 3,
    },
    {
      path: "severity/cat2",
      label: "Category 2",
      question: "Which is harder to obtain?",
      items: [
        { name: "b1", label: "B1" },
        { name: "b2", label: "B2" },
      ],
      pairs: 1,
    },
  ],
  scale: [1 / 9, 1],
};

/** Scripted service double: canned CR/weight numbers, no real math. */
class MockService {
  judgments = new Map<string, Map<string, number>>();
  submitted = false;
  crByGroup: Record<string, number> = {
    severity: 0.0,
    "severity/cat1": 0.0321,
    "severity/cat2": 0.0,
  };

  async getHierarchy(): Promise<HierarchyPayload> {
    return HIERARCHY;
  }

  async createSession(): Promise<{ session_id: string; status: string }> {
    return { session_id: "s1", status: "open" };
  }

  async getSession() {
    const groups: Record<string, unknown> = {};
    for (const group of HIERARCHY.groups) {
      const pairs = this.judgments.get(group.path) ?? new Map();
      groups[group.path] = {
        judgments: [...pairs.entries()].map(([key, ratio]) => {
          const [item_a, item_b] = key.split("|");
          return { item_a, item_b, ratio };
        }),
        complete: pairs.size >= group.pairs,
        cr: pairs.size >= group.pairs ? this.crByGroup[group.path] : null,
        weights: null,
      };
    }
    return {
      schema_version: 1,
      session_id: "s1",
      expert_id: "mock-expert",
      status: "open",
      groups,
    };
  }

  async putJudgment(
    _sid: string,
    judgment: { group: string; item_a: string; item_b: string; ratio: number },
  ) {
    const group = HIERARCHY.groups.find((g) => g.path === judgment.group)!;
    const pairs = this.judgments.get(judgment.group) ?? new Map<string, number>();
    pairs.set(`${judgment.item_a}|${judgment.item_b}`, judgment.ratio);
    this.judgments.set(judgment.group, pairs);
    const complete = pairs.size >= group.pairs;
    return {
      schema_version: 1,
      group: judgment.group,
      complete,
      cr: complete ? this.crByGroup[judgment.group] : null,
      weights: complete ? { [group.items[0].name]: 0.5 } : null,
      status: "open",
    };
  }

  async submit(): Promise<{ status: string }> {
    const offending = HIERARCHY.groups
      .filter((g) => this.crByGroup[g.path] >= 0.1)
      .map((g) => ({ group: g.path, cr: this.crByGroup[g.path] }));
    if (offending.length) {
      throw new ApiError(409, { error: "inconsistent", groups: offending });
    }
    this.submitted = true;
    return { status: "submitted" };
  }

  async aggregate() {
    return {
      schema_version: 1,
      weight_model: {
        local_weights: {},
        global_leaf_weights: { "severity/cat1/a1": 0.5, "severity/cat1/a2": 0.3, "severity/cat2/b1": 0.2 },
      },
      kendalls_w: null,
      strong_agreement: true,
    };
  }
}

function flowWith(service: MockService): QuestionnaireFlow {
  return new QuestionnaireFlow(service as unknown as ApiClient);
}

async function answerAll(flow: QuestionnaireFlow): Promise<void> {
  for (const page of flow.pages) {
    const items = page.info.items;
    for (let i = 0; i < items.length; i += 1) {
      for (let j = i + 1; j < items.length; j += 1) {
        await flow.answer(page.info.path, items[i].name, items[j].name, ratioToPosition(1));
      }
    }
  }
}

describe("questionnaire flow", () => {
  it("orders leaf groups before category levels", () => {
    const pages = orderPages(HIERARCHY.hierarchy, HIERARCHY.groups).map((g) => g.path);
    expect(pages).toEqual(["severity/cat1", "severity/cat2", "severity"]);
  });

  it("walks a consistent session to submission", async () => {
    const service = new MockService();
    const flow = flowWith(service);
    await flow.start("mock-expert");
    expect(flow.pages.every((p) => flow.badge(p.info.path) === "pending")).toBe(true);
    expect(flow.submittable).toBe(false);

    await answerAll(flow);
    for (const page of flow.pages) {
      expect(flow.badge(page.info.path)).toBe("green");
    }
    expect(flow.submittable).toBe(true);

    const result = await flow.submit();
    expect(result.ok).toBe(true);
    expect(flow.status).toBe("submitted");
    expect(service.submitted).toBe(true);

    const bars = await flow.summary();
    expect(bars.map((b) => b.weight)).toEqual([0.5, 0.3, 0.2]);
  });

  it("displays exactly the service's consistency numbers", async () => {
    const service = new MockService();
    const flow = flowWith(service);
    await flow.start("mock-expert");
    await answerAll(flow);
    const page = flow.page("severity/cat1");
    expect(page.cr).toBe(0.0321); // verbatim service value, no local recomputation
    expect(formatCr(page.cr)).toBe("CR 0.03");
    expect(page.weights).toEqual({ a1: 0.5 });
  });

  it("turns the badge red and blocks submission on inconsistency", async () => {
    const service = new MockService();
    service.crByGroup["severity/cat1"] = 0.14;
    const flow = flowWith(service);
    await flow.start("mock-expert");
    await answerAll(flow);
    // make the stored answers intransitive so the hint has a target
    await flow.answer("severity/cat1", "a1", "a2", ratioToPosition(9));
    await flow.answer("severity/cat1", "a2", "a3", ratioToPosition(9));
    await flow.answer("severity/cat1", "a1", "a3", ratioToPosition(1 / 9));

    expect(flow.badge("severity/cat1")).toBe("red");
    expect(flow.submittable).toBe(false);
    const hint = flow.hint("severity/cat1");
    expect(hint).not.toBeNull();
    expect(hint!.items).toEqual(["a1", "a2", "a3"]);

    const result = await flow.submit();
    expect(result.ok).toBe(false);
    expect(result.offending).toEqual(["severity/cat1"]);
    expect(flow.page("severity/cat1").reopened).toBe(true);
  });

  it("resumes a session from service state", async () => {
    const service = new MockService();
    const first = flowWith(service);
    await first.start("mock-expert");
    await answerAll(first);

    const resumed = flowWith(service);
    await resumed.start("", "s1");
    expect(resumed.sessionId).toBe("s1");
    expect(resumed.expertId).toBe("mock-expert");
    for (const page of resumed.pages) {
      expect(page.complete).toBe(true);
      expect(page.cr).toBe(service.crByGroup[page.info.path]);
    }
  });
});
