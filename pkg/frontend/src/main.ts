import { HttpChatApi } from "./api";
import { createApp } from "./app";
import { loadSettings } from "./state";

const root = document.getElementById("app");
if (root) {
  // the client re-reads the persisted base URL on every request, so changing
  // the server field takes effect without a reload
  const api = new HttpChatApi(() => loadSettings(localStorage).baseUrl);
  createApp(root, api, localStorage);
}
