// Full-stack round trip: the real annotation service is spawned from the
// Python package and driven through the UI's API client and selection
// logic, mirroring what the browser does click for click.
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { SelectionState } from "../src/state.js";

const repoRoot = join(dirname(fileURLToPath(import.meta.url)), "..", "..");
const port = 8600 + (process.pid % 300);
const base = `http://127.0.0.1:${port}`;
const annotator = "vitest";

let workdir: string;
let server: ChildProcess | undefined;
const api = new ApiClient(base);

function fixtureCorpus(): string {
  const paper = (id: string, nFigures: number) => ({
    id,
    title: `Fixture paper ${id}`,
    abstract: `Abstract of ${id}, summarized best by one of its figures.`,
    domain: "ui-fixture",
    paragraphs: [
      { id: `${id}:p1`, text: "Figure 1 shows the pipeline." },
      { id: `${id}:p2`, text: "Figure 2 and Figure 3 report results." },
    ],
    figures: Array.from({ length: nFigures }, (_unused, k) => ({
      id: `${id}:f${k + 1}`,
      order_index: k,
      label_number: k + 1,
      caption: `Figure ${k + 1}: caption ${k + 1} of ${id}`,
    })),
  });
  return [paper("UI1", 6), paper("UI2", 5)]
    .map((doc) => JSON.stringify(doc))
    .join("\n");
}

async function waitForServer(): Promise<void> {
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const response = await fetch(`${base}/api/papers`);
      if (response.ok) {
        return;
      }
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      throw new Error(`service on port ${port} did not come up`);
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "figrank-ui-"));
  const corpus = join(workdir, "corpus.jsonl");
  writeFileSync(corpus, fixtureCorpus() + "\n");
  server = spawn(
    "python3",
    [
      "-m",
      "figrank.cli",
      "serve",
      "--corpus",
      corpus,
      "--store",
      join(workdir, "events.jsonl"),
      "--host",
      "127.0.0.1",
      "--port",
      String(port),
      "--seed",
      "3",
    ],
    { cwd: repoRoot, stdio: "ignore" },
  );
  await waitForServer();
});

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("annotation round trip against the live service", () => {
  it("serves the six-figure paper in a stable session order", async () => {
    const view = await api.getPaper("UI1", annotator);
    expect(view.required_ranking_size).toBe(3);
    expect(view.figures).toHaveLength(6);
    const ids = view.figures.map((f) => f.figure_id);
    expect([...ids].sort()).toEqual(
      ["UI1:f1", "UI1:f2", "UI1:f3", "UI1:f4", "UI1:f5", "UI1:f6"].sort(),
    );
    const again = await api.getPaper("UI1", annotator);
    expect(again.figures.map((f) => f.figure_id)).toEqual(ids);
  });

  it("rejects fewer than three picks on both sides of the wire", async () => {
    const view = await api.getPaper("UI1", annotator);
    const state = new SelectionState(view.required_ranking_size);
    state.toggle(view.figures[0].figure_id);
    state.toggle(view.figures[1].figure_id);
    expect(state.canSubmit()).toBe(false);
    await expect(
      api.submitRanking("UI1", annotator, state.selection()),
    ).rejects.toMatchObject({
      name: "ApiError",
      status: 422,
      detail: expect.stringContaining("expected exactly 3"),
    });
  });

  it("exports a submitted ranking verbatim", async () => {
    const view = await api.getPaper("UI1", annotator);
    const state = new SelectionState(view.required_ranking_size);
    // Click the 3rd, 1st and 5th card as displayed.
    state.toggle(view.figures[2].figure_id);
    state.toggle(view.figures[0].figure_id);
    state.toggle(view.figures[4].figure_id);
    expect(state.canSubmit()).toBe(true);

    const receipt = await api.submitRanking("UI1", annotator, state.selection());
    expect(receipt.status).toBe("recorded");

    const records = await api.fetchExport();
    const mine = records.filter(
      (r) => r.paper_id === "UI1" && r.annotator_id === annotator,
    );
    expect(mine).toHaveLength(1);
    expect(mine[0].ranking).toEqual(state.selection());
  });

  it("resubmission supersedes at export and prefills the next session", async () => {
    const view = await api.getPaper("UI1", annotator);
    const state = new SelectionState(view.required_ranking_size);
    state.toggle(view.figures[5].figure_id);
    state.toggle(view.figures[3].figure_id);
    state.toggle(view.figures[1].figure_id);
    await api.submitRanking("UI1", annotator, state.selection());

    const records = await api.fetchExport();
    const mine = records.filter(
      (r) => r.paper_id === "UI1" && r.annotator_id === annotator,
    );
    expect(mine).toHaveLength(1);
    expect(mine[0].ranking).toEqual(state.selection());

    const reopened = await api.getPaper("UI1", annotator);
    expect(reopened.prior_ranking).toEqual(state.selection());
  });

  it("skip leaves no gold record and unknown papers are a 404 banner case", async () => {
    const receipt = await api.skipPaper("UI2", annotator);
    expect(receipt.status).toBe("skipped");
    const records = await api.fetchExport();
    expect(records.some((r) => r.paper_id === "UI2")).toBe(false);

    await expect(api.getPaper("nope", annotator)).rejects.toBeInstanceOf(ApiError);
  });

  it("lists the skipped-but-unannotated paper before the annotated one", async () => {
    const papers = await api.listPapers(annotator);
    expect(papers.map((p) => p.paper_id)).toEqual(["UI2", "UI1"]);
    expect(papers[1].annotated_by_me).toBe(true);
    expect(papers[0].annotated_by_me).toBe(false);
  });
});
