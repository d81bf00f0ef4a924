/** Bootstrap: resolve the annotator identity, then hand off to the app. */

import { ApiClient } from "./api.js";
import { App } from "./app.js";

const STORAGE_KEY = "figrank.annotator_id";

function resolveAnnotatorId(): string {
  const stored = window.localStorage.getItem(STORAGE_KEY);
  if (stored) {
    return stored;
  }
  let entered = "";
  while (!entered) {
    entered = (window.prompt("Annotator id (e.g. your initials):") ?? "").trim();
  }
  window.localStorage.setItem(STORAGE_KEY, entered);
  return entered;
}

const root = document.getElementById("root");
if (!root) {
  throw new Error("missing #root container");
}
const app = new App(root, new ApiClient(""), resolveAnnotatorId());
void app.start();
