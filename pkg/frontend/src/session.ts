/**
 * Worker session state machine, independent of the DOM.
 *
 * Guarantees encoded here:
 *   - an answer can only be submitted for the currently displayed task;
 *   - at most one platform request is in flight per session (`busy`);
 *   - a successful submit immediately fetches the next task;
 *   - already_answered / task_complete skip to the next task with a notice;
 *   - schema_violation stays on the task and renders the problem inline;
 *   - connection failures surface as a retryable error screen;
 *   - the worker id persists in the provided storage (browser localStorage).
 */

import type { Fetched, TaskView } from "./api.js";
import { renderTemplate } from "./render.js";

export const WORKER_ID_KEY = "crowdpipe.worker_id";

export interface KeyValueStore {
  get(key: string): string | null;
  set(key: string, value: string): void;
}

/** The two platform calls the UI is allowed to make. */
export interface WorkerApi {
  nextTask(projectId: string, workerId: string): Promise<Fetched<TaskView | null>>;
  submitAnswer(
    taskId: string,
    workerId: string,
    answer: unknown,
  ): Promise<Fetched<unknown>>;
}

export type Screen =
  | { kind: "enter-worker-id" }
  | { kind: "loading" }
  | { kind: "task"; notice?: string; inlineError?: string }
  | { kind: "no-tasks" }
  | { kind: "connection-error"; detail: string };

export interface SessionState {
  workerId: string | null;
  projectId: string;
  currentTask: TaskView | null;
  presenterHtml: string;
  screen: Screen;
  busy: boolean;
}

export class Session {
  onChange: (state: SessionState) => void = () => {};

  private current: SessionState;

  constructor(
    private readonly api: WorkerApi,
    projectId: string,
    private readonly storage: KeyValueStore,
  ) {
    const workerId = storage.get(WORKER_ID_KEY);
    this.current = {
      workerId,
      projectId,
      currentTask: null,
      presenterHtml: "",
      screen: workerId ? { kind: "loading" } : { kind: "enter-worker-id" },
      busy: false,
    };
  }

  get state(): SessionState {
    return this.current;
  }

  setWorkerId(workerId: string): void {
    const trimmed = workerId.trim();
    if (!trimmed) {
      return;
    }
    this.storage.set(WORKER_ID_KEY, trimmed);
    this.update({ workerId: trimmed, screen: { kind: "loading" } });
  }

  /** Fetch and display the next task (also the retry action). */
  async refresh(): Promise<void> {
    if (this.current.busy || this.current.workerId === null) {
      return;
    }
    this.update({ busy: true });
    const result = await this.api.nextTask(
      this.current.projectId,
      this.current.workerId,
    );
    this.showNextTask(result, undefined);
  }

  /** Submit an answer for the currently displayed task. */
  async submit(answer: unknown): Promise<void> {
    const { busy, currentTask, workerId } = this.current;
    if (busy || currentTask === null || workerId === null) {
      return; // double-submit guard / no task on screen
    }
    this.update({ busy: true });
    const result = await this.api.submitAnswer(
      currentTask.task_id,
      workerId,
      answer,
    );

    if (result.kind === "ok") {
      this.showNextTask(await this.nextTask(), undefined);
      return;
    }
    if (result.kind === "network-error") {
      this.update({
        busy: false,
        screen: { kind: "connection-error", detail: result.detail },
      });
      return;
    }
    switch (result.error.error) {
      case "already_answered":
        this.showNextTask(
          await this.nextTask(),
          "You had already answered that task — here is the next one.",
        );
        return;
      case "task_complete":
        this.showNextTask(
          await this.nextTask(),
          "That task just received all its answers — here is the next one.",
        );
        return;
      case "schema_violation":
        this.update({
          busy: false,
          screen: { kind: "task", inlineError: result.error.detail },
        });
        return;
      default:
        this.update({
          busy: false,
          screen: {
            kind: "connection-error",
            detail: `${result.error.error}: ${result.error.detail}`,
          },
        });
    }
  }

  private nextTask(): Promise<Fetched<TaskView | null>> {
    // workerId checked by the callers; busy stays true across the fetch so
    // the whole submit→next sequence is a single in-flight interaction
    return this.api.nextTask(this.current.projectId, this.current.workerId!);
  }

  private showNextTask(
    result: Fetched<TaskView | null>,
    notice: string | undefined,
  ): void {
    if (result.kind === "network-error") {
      this.update({
        busy: false,
        screen: { kind: "connection-error", detail: result.detail },
      });
      return;
    }
    if (result.kind === "api-error") {
      this.update({
        busy: false,
        screen: {
          kind: "connection-error",
          detail: `${result.error.error}: ${result.error.detail}`,
        },
      });
      return;
    }
    if (result.value === null) {
      this.update({
        busy: false,
        currentTask: null,
        presenterHtml: "",
        screen: { kind: "no-tasks" },
      });
      return;
    }
    this.update({
      busy: false,
      currentTask: result.value,
      presenterHtml: renderTemplate(result.value.template, result.value.payload.object),
      screen: { kind: "task", notice },
    });
  }

  private update(patch: Partial<SessionState>): void {
    this.current = { ...this.current, ...patch };
    this.onChange(this.current);
  }
}
