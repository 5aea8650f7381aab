import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { mount } from "./render.js";

/** Browser entry point: ?task=...&worker=... select the HIT queue. */
function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const task = params.get("task") ?? "task";
  const worker = params.get("worker") ?? `worker-${Math.floor(Math.random() * 1e6)}`;
  const base = params.get("api") ?? "";

  const client = new ApiClient(base, task);
  const controller = new SessionController(client, worker);
  const root = document.getElementById("root");
  if (root === null) {
    throw new Error("missing #root element");
  }
  mount(root as HTMLElement, controller, client);
  void controller.start();
}

window.addEventListener("load", boot);
