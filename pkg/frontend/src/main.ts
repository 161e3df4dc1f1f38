/**
 * DOM wiring: reads ?project= from the URL, holds the worker id in
 * localStorage, and renders the session screens into #app.
 */

import { PlatformApi } from "./api.js";
import { checkAnswer, controlsFor } from "./render.js";
import { Session, type SessionState } from "./session.js";

export interface SessionLike {
  state: SessionState;
  setWorkerId(workerId: string): void;
  refresh(): Promise<void>;
  submit(answer: unknown): Promise<void>;
}

export function projectFromSearch(search: string): string | null {
  const project = new URLSearchParams(search).get("project");
  return project && project.trim() !== "" ? project.trim() : null;
}

function el(
  tag: string,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElement {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

let retryTimer: ReturnType<typeof setTimeout> | undefined;

export function renderScreen(
  root: HTMLElement,
  session: SessionLike,
  options: { autoRetryMs?: number } = {},
): void {
  const state = session.state;
  if (retryTimer !== undefined) {
    clearTimeout(retryTimer);
    retryTimer = undefined;
  }

  const card = el("div", { class: "card" });

  if (state.workerId !== null) {
    card.append(
      el("div", { class: "session-header" }, [
        el("span", {}, [`project: ${state.projectId}`]),
        el("span", {}, [`worker: ${state.workerId}`]),
      ]),
    );
  }

  switch (state.screen.kind) {
    case "enter-worker-id": {
      const input = el("input", {
        type: "text",
        id: "worker-id-input",
        placeholder: "e.g. jane",
        autocomplete: "off",
      }) as HTMLInputElement;
      const start = el("button", { id: "start-button" }, ["Start working"]);
      start.addEventListener("click", () => {
        session.setWorkerId(input.value);
        void session.refresh();
      });
      card.append(
        el("h2", {}, ["Welcome"]),
        el("p", { class: "muted" }, ["Pick a worker name to begin."]),
        input,
        el("div", { class: "controls" }, [start]),
      );
      break;
    }

    case "loading": {
      card.append(el("p", { class: "muted" }, ["Loading…"]));
      break;
    }

    case "no-tasks": {
      const again = el("button", { class: "secondary", id: "check-again" }, [
        "Check again",
      ]);
      again.addEventListener("click", () => void session.refresh());
      card.append(
        el("h2", {}, ["No tasks available"]),
        el("p", { class: "muted" }, [
          "Everything in this project has been answered. Thank you!",
        ]),
        el("div", { class: "controls" }, [again]),
      );
      break;
    }

    case "connection-error": {
      const retry = el("button", { id: "retry-button" }, ["Retry"]);
      retry.addEventListener("click", () => void session.refresh());
      card.append(
        el("div", { class: "banner error", id: "retry-banner" }, [
          `Cannot reach the platform: ${state.screen.detail}`,
        ]),
        el("div", { class: "controls" }, [retry]),
      );
      if (options.autoRetryMs && options.autoRetryMs > 0) {
        retryTimer = setTimeout(() => void session.refresh(), options.autoRetryMs);
      }
      break;
    }

    case "task": {
      const task = state.currentTask;
      if (task === null) {
        card.append(el("p", { class: "muted" }, ["Loading…"]));
        break;
      }
      if (state.screen.notice) {
        card.append(
          el("div", { class: "banner notice", id: "skip-notice" }, [
            state.screen.notice,
          ]),
        );
      }
      if (state.screen.inlineError) {
        card.append(
          el("div", { class: "banner error", id: "inline-error" }, [
            state.screen.inlineError,
          ]),
        );
      }
      const presenter = el("div", { class: "presenter", id: "presenter" });
      presenter.innerHTML = state.presenterHtml;
      card.append(presenter);

      const controls = controlsFor(task.schema);
      const row = el("div", { class: "controls" });
      if (controls.kind === "labels") {
        for (const label of controls.labels) {
          const button = el(
            "button",
            { "data-answer": label },
            [label],
          ) as HTMLButtonElement;
          button.disabled = state.busy;
          button.addEventListener("click", () => void session.submit(label));
          row.append(button);
        }
      } else {
        const box = el("textarea", {
          id: "answer-text",
          rows: "4",
          placeholder: "Type your answer",
        }) as HTMLTextAreaElement;
        const send = el("button", { id: "submit-text" }, [
          "Submit",
        ]) as HTMLButtonElement;
        send.disabled = state.busy;
        send.addEventListener("click", () => {
          if (checkAnswer(task.schema, box.value) === null) {
            void session.submit(box.value);
          }
        });
        card.append(box);
        row.append(send);
      }
      card.append(row);
      break;
    }
  }

  root.replaceChildren(card);
}

export function init(root: HTMLElement): void {
  const project = projectFromSearch(window.location.search);
  if (project === null) {
    root.replaceChildren(
      el("div", { class: "card" }, [
        el("h2", {}, ["No project selected"]),
        el("p", { class: "muted" }, [
          "Open this page as /worker?project=<project id or name>.",
        ]),
      ]),
    );
    return;
  }
  const session = new Session(new PlatformApi(""), project, {
    get: (key) => window.localStorage.getItem(key),
    set: (key, value) => window.localStorage.setItem(key, value),
  });
  session.onChange = () => renderScreen(root, session, { autoRetryMs: 5000 });
  renderScreen(root, session, { autoRetryMs: 5000 });
  if (session.state.workerId !== null) {
    void session.refresh();
  }
}

const appRoot = typeof document !== "undefined" ? document.getElementById("app") : null;
if (appRoot !== null) {
  init(appRoot);
}
