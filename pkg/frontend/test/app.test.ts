// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { ChatApi } from "../src/api";
import { createApp } from "../src/app";
import { StorageLike } from "../src/state";
import {
  ApiError,
  ChatRequestBody,
  ChatResponse,
  ChunkResponse,
  HealthResponse,
} from "../src/types";

const RESPONSE: ChatResponse = {
  answer: "New analysts file an access ticket. *(guide.md/1)*",
  citations: [{ doc_name: "guide.md", chunk_id: 1 }],
  dangling: [],
  hits: [
    {
      doc_name: "guide.md",
      chunk_id: 1,
      final_score: 0.03,
      fused_score: 0.03,
      lexical_rank: 1,
      vector_rank: 1,
      text: "chunk body",
    },
  ],
  language: "en",
  timings_ms: { prepare_ms: 1, retrieve_ms: 1, rerank_ms: 1, generate_ms: 1 },
};

class FakeApi implements ChatApi {
  bodies: ChatRequestBody[] = [];
  chunkRequests: Array<[string, number]> = [];
  nextResponse: ChatResponse = RESPONSE;
  failWith: ApiError | null = null;
  delay: Promise<void> | null = null;

  async chat(body: ChatRequestBody): Promise<ChatResponse> {
    this.bodies.push(body);
    if (this.failWith) throw this.failWith;
    if (this.delay) await this.delay;
    return this.nextResponse;
  }

  async chunk(docName: string, chunkId: number): Promise<ChunkResponse> {
    this.chunkRequests.push([docName, chunkId]);
    if (docName === "ghost.md") throw new ApiError("not_found", "missing", 404);
    return { text: "chunk body", boost_weight: 2.0, source_kind: "internal" };
  }

  async health(): Promise<HealthResponse> {
    return { status: "ok", chunks: 1, config_preset: "baseline" };
  }
}

function memoryStorage(): StorageLike {
  const data = new Map<string, string>();
  return {
    getItem: (key) => data.get(key) ?? null,
    setItem: (key, value) => void data.set(key, value),
  };
}

function setup(storage: StorageLike = memoryStorage()) {
  const root = document.createElement("main");
  document.body.replaceChildren(root);
  const api = new FakeApi();
  const app = createApp(root, api, storage);
  const input = root.querySelector<HTMLInputElement>("#question")!;
  const send = root.querySelector<HTMLButtonElement>("#send")!;
  return { root, api, app, input, send, storage };
}

function type(input: HTMLInputElement, value: string) {
  input.value = value;
  input.dispatchEvent(new Event("input"));
}

describe("sending a question", () => {
  it("appends a user and an assistant bubble", async () => {
    const { root, app, input } = setup();
    type(input, "How do analysts get access?");
    await app.send();
    const bubbles = root.querySelectorAll(".bubble");
    expect(bubbles).toHaveLength(2);
    expect(bubbles[0].classList.contains("user")).toBe(true);
    expect(bubbles[1].classList.contains("assistant")).toBe(true);
    expect(bubbles[1].querySelector(".text")!.textContent).toContain("access ticket");
  });

  it("renders one chip per citation", async () => {
    const { root, api, app, input } = setup();
    api.nextResponse = {
      ...RESPONSE,
      citations: [
        { doc_name: "guide.md", chunk_id: 1 },
        { doc_name: "ghost.md", chunk_id: 9 },
      ],
      dangling: [{ doc_name: "ghost.md", chunk_id: 9 }],
    };
    type(input, "q?");
    await app.send();
    const chips = root.querySelectorAll<HTMLButtonElement>(".chip");
    expect([...chips].map((c) => c.textContent)).toEqual(["guide.md/1", "ghost.md/9"]);
    expect(chips[0].classList.contains("dangling")).toBe(false);
    expect(chips[1].classList.contains("dangling")).toBe(true);
  });

  it("shows stage timings and settings in the metadata line", async () => {
    const { root, app, input } = setup();
    type(input, "q?");
    await app.send();
    const meta = root.querySelector(".meta")!.textContent!;
    expect(meta).toContain("prepare");
    expect(meta).toContain("hybrid · top-k 10 · boost off");
  });

  it("send stays disabled for empty input", () => {
    const { send, input } = setup();
    expect(send.disabled).toBe(true);
    type(input, "   ");
    expect(send.disabled).toBe(true);
    type(input, "real question");
    expect(send.disabled).toBe(false);
  });

  it("disables send while a request is in flight", async () => {
    const { api, app, input, send } = setup();
    let release!: () => void;
    api.delay = new Promise<void>((resolve) => {
      release = resolve;
    });
    type(input, "slow question");
    const inFlight = app.send();
    expect(send.disabled).toBe(true);
    release();
    await inFlight;
    expect(input.value).toBe(""); // cleared after success
    type(input, "next question");
    expect(send.disabled).toBe(false);
  });

  it("renders an error bubble with the API code and keeps the input", async () => {
    const { root, api, app, input } = setup();
    api.failWith = new ApiError("empty_query", "question must be non-empty", 400);
    type(input, "q?");
    await app.send();
    const error = root.querySelector(".bubble.error")!;
    expect(error.textContent).toContain("empty_query");
    expect(input.value).toBe("q?");
    (error.querySelector(".dismiss") as HTMLButtonElement).click();
    expect(root.querySelector(".bubble.error")).toBeNull();
  });
});

describe("citation side panel", () => {
  it("shows chunk text, source badge and boost weight", async () => {
    const { root, app } = setup();
    await app.openCitation("guide.md", 1);
    const panel = root.querySelector("#panel")!;
    expect(panel.classList.contains("hidden")).toBe(false);
    expect(panel.querySelector(".chunk-text")!.textContent).toBe("chunk body");
    expect(panel.querySelector(".badge")!.textContent).toBe("internal");
    expect(panel.querySelector(".boost")!.textContent).toContain("2");
  });

  it("clicking a chip opens the panel for that chunk", async () => {
    const { root, api, app, input } = setup();
    type(input, "q?");
    await app.send();
    root.querySelector<HTMLButtonElement>(".chip")!.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(api.chunkRequests).toEqual([["guide.md", 1]]);
    expect(root.querySelector(".chunk-text")!.textContent).toBe("chunk body");
  });

  it("shows a not-found state on 404", async () => {
    const { root, app } = setup();
    await app.openCitation("ghost.md", 9);
    expect(root.querySelector(".not-found")!.textContent).toBe("chunk not found");
  });
});

describe("settings", () => {
  it("toggling boosting changes the next request body", async () => {
    const { root, api, app, input } = setup();
    type(input, "first");
    await app.send();
    const boost = root.querySelector<HTMLInputElement>("#boost")!;
    boost.checked = true;
    boost.dispatchEvent(new Event("change"));
    type(input, "second");
    await app.send();
    expect(api.bodies.map((b) => b.boosting)).toEqual([false, true]);
  });

  it("mode switch is used on the next request", async () => {
    const { root, api, app, input } = setup();
    const mode = root.querySelector<HTMLSelectElement>("#mode")!;
    mode.value = "text";
    mode.dispatchEvent(new Event("change"));
    type(input, "q?");
    await app.send();
    expect(api.bodies[0].mode).toBe("text");
  });

  it("settings survive a reload via storage", () => {
    const storage = memoryStorage();
    const first = setup(storage);
    const topK = first.root.querySelector<HTMLSelectElement>("#top-k")!;
    topK.value = "20";
    topK.dispatchEvent(new Event("change"));
    const second = setup(storage);
    expect(second.app.settings.topK).toBe(20);
    expect(second.root.querySelector<HTMLSelectElement>("#top-k")!.value).toBe("20");
  });
});
