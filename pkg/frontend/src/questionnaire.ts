/**
 * DOM layer: renders the paged question flow and reflects the flow state.
 * Every number shown (consistency ratios, weights) is a service value held
 * in the flow; this module only formats.
 */

import { ApiError } from "./api.js";
import { QuestionnaireFlow } from "./state.js";
import { EQUAL_POSITION, positionLabel, ratioToPosition, SLIDER_POSITIONS } from "./scale.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function formatCr(cr: number | null): string {
  return cr === null ? "CR –" : `CR ${cr.toFixed(2)}`;
}

export class QuestionnaireView {
  private pageIndex = 0;

  constructor(
    private readonly root: HTMLElement,
    private readonly flow: QuestionnaireFlow,
  ) {}

  render(): void {
    this.root.replaceChildren();
    if (this.flow.status === "submitted") {
      void this.renderSummary();
      return;
    }
    this.renderNav();
    this.renderPage();
    this.renderSubmitBar();
  }

  private renderNav(): void {
    const nav = el("nav", "pages");
    this.flow.pages.forEach((page, index) => {
      const badge = this.flow.badge(page.info.path);
      const button = el("button", `page-tab badge-${badge}`, page.info.label);
      if (index === this.pageIndex) {
        button.classList.add("active");
      }
      if (page.reopened) {
        button.classList.add("reopened");
      }
      button.addEventListener("click", () => {
        this.pageIndex = index;
        this.render();
      });
      nav.append(button);
    });
    this.root.append(nav);
  }

  private renderPage(): void {
    const page = this.flow.pages[this.pageIndex];
    const section = el("section", "page");
    section.append(el("h2", undefined, page.info.label));
    section.append(el("p", "question", page.info.question));

    const badge = this.flow.badge(page.info.path);
    const badgeNode = el("span", `cr-badge badge-${badge}`, formatCr(page.cr));
    section.append(badgeNode);

    const hint = this.flow.hint(page.info.path);
    if (hint) {
      const labels = hint.items
        .map((name) => page.info.items.find((i) => i.name === name)?.label ?? name)
        .join(", ");
      section.append(
        el("p", "hint", `Least transitive answers: ${labels}. Revisit these to restore consistency.`),
      );
    }

    const items = page.info.items;
    for (let i = 0; i < items.length; i += 1) {
      for (let j = i + 1; j < items.length; j += 1) {
        section.append(this.renderCard(page.info.path, items[i], items[j]));
      }
    }
    this.root.append(section);
  }

  private renderCard(
    path: string,
    itemA: { name: string; label: string },
    itemB: { name: string; label: string },
  ): HTMLElement {
    const page = this.flow.page(path);
    const card = el("div", "question-card");
    card.append(el("span", "item item-a", itemA.label));
    const middle = el("div", "slider-wrap");
    const slider = el("input") as HTMLInputElement;
    slider.type = "range";
    slider.min = "0";
    slider.max = String(SLIDER_POSITIONS - 1);
    slider.step = "1";
    const existing =
      page.answers.get(`${itemA.name}|${itemB.name}`) ??
      (page.answers.has(`${itemB.name}|${itemA.name}`)
        ? 1 / page.answers.get(`${itemB.name}|${itemA.name}`)!
        : undefined);
    slider.value = String(existing === undefined ? EQUAL_POSITION : ratioToPosition(existing));
    const caption = el(
      "div",
      "slider-caption",
      positionLabel(Number(slider.value), itemA.label, itemB.label),
    );
    slider.addEventListener("input", () => {
      caption.textContent = positionLabel(Number(slider.value), itemA.label, itemB.label);
    });
    slider.addEventListener("change", () => {
      void this.answer(path, itemA.name, itemB.name, Number(slider.value));
    });
    middle.append(slider, caption);
    card.append(middle);
    card.append(el("span", "item item-b", itemB.label));
    return card;
  }

  private async answer(path: string, a: string, b: string, position: number): Promise<void> {
    try {
      await this.flow.answer(path, a, b, position);
      this.clearBanner();
    } catch (error) {
      this.showError(error);
    }
    this.render();
  }

  private renderSubmitBar(): void {
    const bar = el("div", "submit-bar");
    const button = el("button", "submit", "Submit questionnaire");
    button.disabled = !this.flow.submittable;
    button.addEventListener("click", () => {
      void this.submit();
    });
    bar.append(button);
    if (!this.flow.submittable) {
      bar.append(
        el("span", "submit-note", "Submission unlocks when every group badge is green (CR < 0.1)."),
      );
    }
    this.root.append(bar);
  }

  private async submit(): Promise<void> {
    try {
      const result = await this.flow.submit();
      if (!result.ok) {
        this.showBanner(`Inconsistent groups: ${result.offending.join(", ")}`);
        const first = this.flow.pages.findIndex((p) => result.offending.includes(p.info.path));
        if (first >= 0) {
          this.pageIndex = first;
        }
      }
    } catch (error) {
      this.showError(error);
    }
    this.render();
  }

  private async renderSummary(): Promise<void> {
    const section = el("section", "summary");
    section.append(el("h2", undefined, "Submitted - your attribute weights"));
    try {
      const bars = await this.flow.summary();
      const maxWeight = bars.length ? bars[0].weight : 1;
      for (const bar of bars) {
        const row = el("div", "bar-row");
        row.append(el("span", "bar-label", bar.leaf.split("/").pop() ?? bar.leaf));
        const track = el("div", "bar-track");
        const fill = el("div", "bar-fill");
        fill.style.width = `${(100 * bar.weight) / maxWeight}%`;
        track.append(fill);
        row.append(track);
        row.append(el("span", "bar-value", bar.weight.toFixed(4)));
        section.append(row);
      }
    } catch (error) {
      this.showError(error);
    }
    this.root.append(section);
  }

  private showError(error: unknown): void {
    if (error instanceof ApiError) {
      this.showBanner(`Service error ${error.status}: ${error.message}`);
    } else {
      this.showBanner(`Connection lost - retry. (${String(error)})`);
    }
  }

  private showBanner(text: string): void {
    this.clearBanner();
    const banner = el("div", "banner", text);
    banner.id = "banner";
    this.root.prepend(banner);
  }

  private clearBanner(): void {
    document.getElementById("banner")?.remove();
  }
}
