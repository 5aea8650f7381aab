import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";

/**
 * DOM rendering for the annotation loop: two videos playing side by side in
 * lockstep, "left is better" / "right is better" buttons (strict preferences
 * only; there is deliberately no tie control anywhere), a pair progress
 * indicator, and a submit button that unlocks once all pairs are answered.
 *
 * Every pair renders through the same code path, so quality-control pairs are
 * indistinguishable from task pairs (the payload does not mark them either).
 */
export function render(
  root: HTMLElement,
  controller: SessionController,
  client: ApiClient,
  doc: Document = document,
): void {
  root.textContent = "";

  const el = (tag: string, cls: string, text = ""): HTMLElement => {
    const node = doc.createElement(tag) as HTMLElement;
    node.className = cls;
    if (text) {
      node.textContent = text;
    }
    return node;
  };

  const page = el("div", "annotator");
  root.appendChild(page);

  if (controller.phase === "loading") {
    page.appendChild(el("p", "status", "Loading the next comparison..."));
    return;
  }
  if (controller.phase === "complete") {
    page.appendChild(
      el(
        "p",
        "status done",
        `All done. You completed ${controller.completedHits} HIT(s). Thank you!`,
      ),
    );
    return;
  }
  if (controller.phase === "conflict") {
    page.appendChild(
      el("p", "status error", "This HIT was already submitted; nothing to redo."),
    );
    return;
  }

  const session = controller.session;
  if (session === null) {
    return;
  }

  if (controller.phase === "submit_failed") {
    page.appendChild(
      el("p", "status error", `Submission failed (${controller.lastError}). Your answers are safe.`),
    );
    const retry = el("button", "retry", "Retry submission") as HTMLButtonElement;
    retry.addEventListener("click", () => void controller.retry());
    page.appendChild(retry);
    return;
  }

  if (session.reviewing) {
    page.appendChild(
      el("p", "status", `All ${session.total} pairs answered. Submit when ready.`),
    );
    const back = el("button", "back", "Review previous pair") as HTMLButtonElement;
    back.addEventListener("click", () => {
      controller.back();
    });
    page.appendChild(back);
  } else {
    const view = session.current;
    page.appendChild(
      el(
        "p",
        "progress",
        `Pair ${session.position + 1} of ${session.total}`,
      ),
    );
    page.appendChild(
      el("p", "prompt", "Watch both videos, then pick the one showing the higher level of skill."),
    );

    const stage = el("div", "stage");
    for (const side of ["left", "right"] as const) {
      const cell = el("div", `cell ${side}`);
      const video = doc.createElement("video") as HTMLVideoElement;
      video.className = "player";
      video.setAttribute("src", client.mediaUrl(side === "left" ? session.leftVideo(view) : session.rightVideo(view)));
      video.setAttribute("loop", "");
      video.setAttribute("autoplay", "");
      video.setAttribute("muted", "");
      cell.appendChild(video);
      const button = el(
        "button",
        `choose ${side}`,
        side === "left" ? "Left is better" : "Right is better",
      ) as HTMLButtonElement;
      button.addEventListener("click", () => {
        controller.select(side);
      });
      cell.appendChild(button);
      stage.appendChild(cell);
    }
    page.appendChild(stage);
  }

  const submit = el("button", "submit", "Submit all 5 judgments") as HTMLButtonElement;
  submit.disabled = !session.canSubmit();
  if (!session.canSubmit()) {
    page.appendChild(
      el(
        "p",
        "gate",
        `Answered ${session.answered()} of ${session.total}; submission unlocks when every pair has a choice.`,
      ),
    );
  }
  submit.addEventListener("click", () => {
    if (session.canSubmit()) {
      void controller.submit();
    }
  });
  page.appendChild(submit);
}

/** Wire the controller's change events to re-rendering into root. */
export function mount(
  root: HTMLElement,
  controller: SessionController,
  client: ApiClient,
  doc: Document = document,
): void {
  controller.onChange = () => render(root, controller, client, doc);
  controller.onChange();
}
