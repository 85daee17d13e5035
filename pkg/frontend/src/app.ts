// DOM wiring for the chat console. createApp() takes an injected API client
// and storage so tests can drive the full UI without a network or browser.

import { ChatApi } from "./api";
import {
  assistantMessage,
  buildChatBody,
  formatTimings,
  loadSettings,
  saveSettings,
  StorageLike,
  userMessage,
} from "./state";
import { ApiError, SearchMode, UiMessage, UiSettings } from "./types";

export interface App {
  root: HTMLElement;
  settings: UiSettings;
  send(): Promise<void>;
  openCitation(docName: string, chunkId: number): Promise<void>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function createApp(
  root: HTMLElement,
  api: ChatApi,
  storage: StorageLike,
): App {
  let settings = loadSettings(storage);
  let pending = false;

  root.innerHTML = "";
  root.appendChild(buildSettingsBar());
  const messages = el("div", "messages");
  messages.id = "messages";
  root.appendChild(messages);
  const composer = buildComposer();
  root.appendChild(composer.form);
  const panel = el("aside", "panel hidden");
  panel.id = "panel";
  root.appendChild(panel);

  function buildSettingsBar(): HTMLElement {
    const bar = el("div", "settings");

    const mode = el("select");
    mode.id = "mode";
    for (const value of ["hybrid", "text", "vector"]) {
      const option = el("option", undefined, value);
      option.value = value;
      mode.appendChild(option);
    }
    mode.value = settings.mode;
    mode.addEventListener("change", () => {
      updateSettings({ ...settings, mode: mode.value as SearchMode });
    });

    const topK = el("select");
    topK.id = "top-k";
    for (const value of [5, 10, 20]) {
      const option = el("option", undefined, String(value));
      option.value = String(value);
      topK.appendChild(option);
    }
    topK.value = String(settings.topK);
    topK.addEventListener("change", () => {
      updateSettings({ ...settings, topK: Number(topK.value) as 5 | 10 | 20 });
    });

    const boost = el("input");
    boost.id = "boost";
    boost.type = "checkbox";
    boost.checked = settings.boosting;
    boost.addEventListener("change", () => {
      updateSettings({ ...settings, boosting: boost.checked });
    });

    const baseUrl = el("input");
    baseUrl.id = "base-url";
    baseUrl.type = "text";
    baseUrl.placeholder = "service base URL (empty = same origin)";
    baseUrl.value = settings.baseUrl;
    baseUrl.addEventListener("change", () => {
      updateSettings({ ...settings, baseUrl: baseUrl.value.trim() });
    });

    bar.appendChild(label("mode", mode));
    bar.appendChild(label("top-k", topK));
    bar.appendChild(label("boosting", boost));
    bar.appendChild(label("server", baseUrl));
    return bar;
  }

  function label(text: string, control: HTMLElement): HTMLLabelElement {
    const wrap = el("label", undefined, text + " ");
    wrap.appendChild(control);
    return wrap;
  }

  function buildComposer() {
    const form = el("form", "composer");
    const input = el("input");
    input.id = "question";
    input.type = "text";
    input.placeholder = "Ask a question…";
    const send = el("button", undefined, "Send");
    send.id = "send";
    send.type = "submit";
    send.disabled = true;
    input.addEventListener("input", () => {
      send.disabled = pending || input.value.trim() === "";
    });
    form.appendChild(input);
    form.appendChild(send);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void sendQuestion();
    });
    return { form, input, send };
  }

  function updateSettings(next: UiSettings): void {
    settings = next;
    saveSettings(storage, settings);
  }

  function renderMessage(message: UiMessage): HTMLElement {
    const bubble = el("div", `bubble ${message.role}`);
    bubble.appendChild(el("div", "text", message.text));
    if (message.role === "assistant") {
      const chips = el("div", "chips");
      for (const chip of message.chips) {
        const button = el(
          "button",
          chip.dangling ? "chip dangling" : "chip",
          `${chip.docName}/${chip.chunkId}`,
        );
        button.type = "button";
        if (chip.dangling) button.title = "citation not backed by retrieved context";
        button.addEventListener("click", () => {
          void openCitation(chip.docName, chip.chunkId);
        });
        chips.appendChild(button);
      }
      bubble.appendChild(chips);
      const meta = el(
        "div",
        "meta",
        [formatTimings(message.timings), message.settingsNote]
          .filter(Boolean)
          .join(" — "),
      );
      bubble.appendChild(meta);
    }
    messages.appendChild(bubble);
    messages.scrollTop = messages.scrollHeight;
    return bubble;
  }

  function renderError(code: string, message: string): void {
    const bubble = el("div", "bubble error");
    bubble.appendChild(el("div", "text", `${code}: ${message}`));
    const dismiss = el("button", "dismiss", "dismiss");
    dismiss.type = "button";
    dismiss.addEventListener("click", () => bubble.remove());
    bubble.appendChild(dismiss);
    messages.appendChild(bubble);
  }

  async function sendQuestion(): Promise<void> {
    const question = composer.input.value.trim();
    if (question === "" || pending) return;
    pending = true;
    composer.send.disabled = true;
    renderMessage(userMessage(question));
    try {
      const response = await api.chat(buildChatBody(question, settings));
      renderMessage(assistantMessage(response, settings));
      composer.input.value = ""; // only clear once the answer arrived
    } catch (err) {
      const apiErr = err instanceof ApiError ? err : new ApiError("error", String(err), 0);
      renderError(apiErr.code, apiErr.message);
    } finally {
      pending = false;
      composer.send.disabled = composer.input.value.trim() === "";
    }
  }

  async function openCitation(docName: string, chunkId: number): Promise<void> {
    panel.classList.remove("hidden");
    panel.innerHTML = "";
    panel.appendChild(el("h3", undefined, `${docName}/${chunkId}`));
    try {
      const chunk = await api.chunk(docName, chunkId);
      panel.appendChild(el("span", `badge ${chunk.source_kind}`, chunk.source_kind));
      panel.appendChild(el("span", "boost", `boost ×${chunk.boost_weight}`));
      panel.appendChild(el("pre", "chunk-text", chunk.text));
    } catch (err) {
      const status = err instanceof ApiError ? err.status : 0;
      panel.appendChild(
        el("div", "not-found", status === 404 ? "chunk not found" : "failed to load chunk"),
      );
    }
  }

  return {
    root,
    get settings() {
      return settings;
    },
    send: sendQuestion,
    openCitation,
  };
}
