/** DOM rendering and the single-page controller.
 *
 * The figure grid is rendered strictly in the order the server sent: the
 * shuffle that hides in-paper figure order is part of the study design and
 * must survive to the screen.  Ranks are entered by clicking cards in
 * order; each card is a button so the flow stays keyboard-accessible.
 */

import { ApiClient, ApiError } from "./api.js";
import { SelectionState } from "./state.js";
import type { PaperSummary, PaperView } from "./types.js";

export function rankLabel(rank: number): string {
  const suffixes: Record<number, string> = { 1: "st", 2: "nd", 3: "rd" };
  return `${rank}${suffixes[rank] ?? "th"}`;
}

export interface ViewHandlers {
  onToggle(figureId: string): void;
  onSubmit(): void;
  onSkip(): void;
}

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

export function renderBanner(
  root: HTMLElement,
  message: string,
  onRetry?: () => void,
): void {
  const old = root.querySelector(".banner");
  if (old) {
    old.remove();
  }
  const banner = el("div", "banner", message);
  if (onRetry) {
    const retry = el("button", "retry", "Retry");
    retry.addEventListener("click", onRetry);
    banner.append(retry);
  }
  root.prepend(banner);
}

export function clearBanner(root: HTMLElement): void {
  const banner = root.querySelector(".banner");
  if (banner) {
    banner.remove();
  }
}

export function renderProgress(
  root: HTMLElement,
  papers: readonly PaperSummary[],
): void {
  const done = papers.filter((p) => p.annotated_by_me).length;
  const header = el(
    "header",
    "progress",
    `Annotated ${done} of ${papers.length} papers`,
  );
  root.append(header);
}

export function renderPaperView(
  root: HTMLElement,
  view: PaperView,
  state: SelectionState,
  handlers: ViewHandlers,
): void {
  const article = el("article", "paper");
  article.append(el("h1", "title", view.title));

  const abstract = el("section", "abstract");
  abstract.append(el("h2", undefined, "Abstract"));
  abstract.append(el("p", undefined, view.abstract));
  article.append(abstract);

  const hint = el(
    "p",
    "hint",
    `Click the ${state.requiredSize} best figures in order; click again to unpick.`,
  );
  article.append(hint);

  const grid = el("div", "figure-grid");
  for (const figure of view.figures) {
    const card = el("button", "figure-card");
    card.type = "button";
    card.dataset.figureId = figure.figure_id;
    if (figure.image_ref) {
      const image = el("img");
      image.src = `/images/${figure.image_ref}`;
      image.alt = figure.caption;
      card.append(image);
    } else {
      card.append(el("div", "placeholder", "no image"));
      card.classList.add("caption-only");
    }
    card.append(el("figcaption", "caption", figure.caption));
    const rank = state.rankOf(figure.figure_id);
    const badge = el("span", "badge", rank === null ? "" : rankLabel(rank));
    if (rank === null) {
      badge.classList.add("hidden");
    } else {
      card.classList.add("selected");
    }
    card.append(badge);
    card.addEventListener("click", () => handlers.onToggle(figure.figure_id));
    grid.append(card);
  }
  article.append(grid);

  const controls = el("div", "controls");
  const submit = el("button", "submit", "Submit ranking");
  submit.type = "button";
  submit.disabled = !state.canSubmit();
  submit.addEventListener("click", () => handlers.onSubmit());
  const skip = el("button", "skip", "Skip this paper");
  skip.type = "button";
  skip.addEventListener("click", () => handlers.onSkip());
  controls.append(submit, skip);
  article.append(controls);

  root.append(article);
}

export class App {
  private papers: PaperSummary[] = [];
  private view: PaperView | null = null;
  private state: SelectionState | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly annotatorId: string,
  ) {}

  async start(): Promise<void> {
    await this.loadNext();
  }

  /** Refresh the paper list and open the next paper without my annotation. */
  async loadNext(): Promise<void> {
    let papers: PaperSummary[];
    try {
      papers = await this.api.listPapers(this.annotatorId);
    } catch (err) {
      this.renderError(err, () => this.loadNext());
      return;
    }
    this.papers = papers;
    const next = papers.find((p) => !p.annotated_by_me);
    if (!next) {
      this.root.replaceChildren();
      renderProgress(this.root, this.papers);
      this.root.append(el("p", "done", "All papers annotated. Thank you!"));
      return;
    }
    await this.open(next.paper_id);
  }

  async open(paperId: string): Promise<void> {
    let view: PaperView;
    try {
      view = await this.api.getPaper(paperId, this.annotatorId);
    } catch (err) {
      this.renderError(err, () => this.open(paperId));
      return;
    }
    this.view = view;
    const state = new SelectionState(view.required_ranking_size);
    if (view.prior_ranking) {
      state.prefill(view.prior_ranking);
    }
    this.state = state;
    this.render();
  }

  private render(): void {
    if (!this.view || !this.state) {
      return;
    }
    this.root.replaceChildren();
    renderProgress(this.root, this.papers);
    renderPaperView(this.root, this.view, this.state, {
      onToggle: (figureId) => {
        if (this.state && this.state.toggle(figureId)) {
          this.render();
        }
      },
      onSubmit: () => void this.submit(),
      onSkip: () => void this.skip(),
    });
  }

  private async submit(): Promise<void> {
    if (!this.view || !this.state || !this.state.canSubmit()) {
      return;
    }
    try {
      await this.api.submitRanking(
        this.view.paper_id,
        this.annotatorId,
        this.state.selection(),
      );
    } catch (err) {
      // Validation problems keep the current selection on screen.
      this.renderError(err);
      return;
    }
    await this.loadNext();
  }

  private async skip(): Promise<void> {
    if (!this.view) {
      return;
    }
    try {
      await this.api.skipPaper(this.view.paper_id, this.annotatorId);
    } catch (err) {
      this.renderError(err);
      return;
    }
    await this.loadNext();
  }

  private renderError(err: unknown, onRetry?: () => void): void {
    const message =
      err instanceof ApiError
        ? err.message
        : `Network failure: ${err instanceof Error ? err.message : String(err)}`;
    renderBanner(this.root, message, onRetry);
  }
}
