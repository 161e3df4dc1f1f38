import { describe, expect, it } from "vitest";

import type { Fetched, TaskView } from "../src/api.js";
import {
  Session,
  WORKER_ID_KEY,
  type KeyValueStore,
  type WorkerApi,
} from "../src/session.js";

function task(id: string, object: unknown = "http://img/1.jpg"): TaskView {
  return {
    task_id: id,
    project_id: "prj-1",
    fingerprint: "f".repeat(64),
    payload: { object },
    n_assignments: 3,
    template: '<img src="{{object}}" />',
    schema: { type: "labels", labels: ["Yes", "No"] },
  };
}

function memoryStore(initial: Record<string, string> = {}): KeyValueStore {
  const map = new Map(Object.entries(initial));
  return {
    get: (key) => map.get(key) ?? null,
    set: (key, value) => void map.set(key, value),
  };
}

/** Scripted fake platform: answers come from queues, calls are recorded. */
class FakeApi implements WorkerApi {
  nextTaskQueue: Fetched<TaskView | null>[] = [];
  submitQueue: Fetched<unknown>[] = [];
  calls: string[] = [];

  async nextTask(projectId: string, workerId: string) {
    this.calls.push(`newtask ${projectId} ${workerId}`);
    const scripted = this.nextTaskQueue.shift();
    if (!scripted) throw new Error("unscripted nextTask call");
    return scripted;
  }

  async submitAnswer(taskId: string, workerId: string, answer: unknown) {
    this.calls.push(`answer ${taskId} ${workerId} ${String(answer)}`);
    const scripted = this.submitQueue.shift();
    if (!scripted) throw new Error("unscripted submitAnswer call");
    return scripted;
  }
}

const ok = <T,>(value: T): Fetched<T> => ({ kind: "ok", value });
const apiError = (error: string, detail = error): Fetched<never> => ({
  kind: "api-error",
  error: { error, detail },
});
const netError = (detail = "connect refused"): Fetched<never> => ({
  kind: "network-error",
  detail,
});

describe("worker id handling", () => {
  it("asks for a worker id when storage has none", () => {
    const session = new Session(new FakeApi(), "prj-1", memoryStore());
    expect(session.state.screen).toEqual({ kind: "enter-worker-id" });
    expect(session.state.workerId).toBeNull();
  });

  it("restores the worker id from storage", () => {
    const store = memoryStore({ [WORKER_ID_KEY]: "jane" });
    const session = new Session(new FakeApi(), "prj-1", store);
    expect(session.state.workerId).toBe("jane");
    expect(session.state.screen).toEqual({ kind: "loading" });
  });

  it("persists an entered worker id and ignores blank input", () => {
    const store = memoryStore();
    const session = new Session(new FakeApi(), "prj-1", store);
    session.setWorkerId("   ");
    expect(session.state.workerId).toBeNull();
    session.setWorkerId("  jane ");
    expect(session.state.workerId).toBe("jane");
    expect(store.get(WORKER_ID_KEY)).toBe("jane");
  });
});

describe("refresh", () => {
  it("renders the next task with the object substituted", async () => {
    const api = new FakeApi();
    api.nextTaskQueue.push(ok(task("tsk-000001", "http://img/9.jpg")));
    const session = new Session(api, "prj-1", memoryStore({ [WORKER_ID_KEY]: "jane" }));
    await session.refresh();
    expect(session.state.screen).toEqual({ kind: "task", notice: undefined });
    expect(session.state.currentTask?.task_id).toBe("tsk-000001");
    expect(session.state.presenterHtml).toBe('<img src="http://img/9.jpg" />');
    expect(api.calls).toEqual(["newtask prj-1 jane"]);
  });

  it("shows the no-tasks page when the project is exhausted", async () => {
    const api = new FakeApi();
    api.nextTaskQueue.push(ok(null));
    const session = new Session(api, "prj-1", memoryStore({ [WORKER_ID_KEY]: "jane" }));
    await session.refresh();
    expect(session.state.screen).toEqual({ kind: "no-tasks" });
    expect(session.state.currentTask).toBeNull();
  });

  it("surfaces connection failures as a retryable screen", async () => {
    const api = new FakeApi();
    api.nextTaskQueue.push(netError("ECONNREFUSED"));
    api.nextTaskQueue.push(ok(task("tsk-000001")));
    const session = new Session(api, "prj-1", memoryStore({ [WORKER_ID_KEY]: "jane" }));
    await session.refresh();
    expect(session.state.screen).toEqual({
      kind: "connection-error",
      detail: "ECONNREFUSED",
    });
    await session.refresh(); // the retry action
    expect(session.state.screen.kind).toBe("task");
  });

  it("does nothing without a worker id", async () => {
    const api = new FakeApi();
    const session = new Session(api, "prj-1", memoryStore());
    await session.refresh();
    expect(api.calls).toEqual([]);
  });
});

describe("submit flow", () => {
  async function sessionShowingTask(api: FakeApi): Promise<Session> {
    api.nextTaskQueue.push(ok(task("tsk-000001")));
    const session = new Session(api, "prj-1", memoryStore({ [WORKER_ID_KEY]: "jane" }));
    await session.refresh();
    return session;
  }

  it("on success immediately fetches and renders the next task", async () => {
    const api = new FakeApi();
    const session = await sessionShowingTask(api);
    api.submitQueue.push(ok({}));
    api.nextTaskQueue.push(ok(task("tsk-000002")));
    await session.submit("Yes");
    expect(api.calls).toEqual([
      "newtask prj-1 jane",
      "answer tsk-000001 jane Yes",
      "newtask prj-1 jane",
    ]);
    expect(session.state.currentTask?.task_id).toBe("tsk-000002");
    expect(session.state.screen).toEqual({ kind: "task", notice: undefined });
  });

  it("skips to the next task with a notice when already answered", async () => {
    const api = new FakeApi();
    const session = await sessionShowingTask(api);
    api.submitQueue.push(apiError("already_answered"));
    api.nextTaskQueue.push(ok(task("tsk-000002")));
    await session.submit("Yes");
    expect(session.state.currentTask?.task_id).toBe("tsk-000002");
    expect(session.state.screen.kind).toBe("task");
    if (session.state.screen.kind === "task") {
      expect(session.state.screen.notice).toMatch(/already answered/);
    }
  });

  it("skips to the next task with a notice when the task completed", async () => {
    const api = new FakeApi();
    const session = await sessionShowingTask(api);
    api.submitQueue.push(apiError("task_complete"));
    api.nextTaskQueue.push(ok(null));
    await session.submit("Yes");
    expect(session.state.screen).toEqual({ kind: "no-tasks" });
  });

  it("renders schema violations inline and stays on the task", async () => {
    const api = new FakeApi();
    const session = await sessionShowingTask(api);
    api.submitQueue.push(apiError("schema_violation", "answer must be one of ['Yes', 'No']"));
    await session.submit("Maybe");
    expect(session.state.currentTask?.task_id).toBe("tsk-000001");
    expect(session.state.screen).toEqual({
      kind: "task",
      inlineError: "answer must be one of ['Yes', 'No']",
    });
    // no extra newtask call: still only the initial one
    expect(api.calls.filter((c) => c.startsWith("newtask"))).toHaveLength(1);
  });

  it("guards against double submits: one in-flight request at a time", async () => {
    const api = new FakeApi();
    const session = await sessionShowingTask(api);

    let release: (value: Fetched<unknown>) => void = () => {};
    const pending = new Promise<Fetched<unknown>>((resolve) => {
      release = resolve;
    });
    api.submitAnswer = async (taskId, workerId, answer) => {
      api.calls.push(`answer ${taskId} ${workerId} ${String(answer)}`);
      return pending;
    };
    api.nextTaskQueue.push(ok(null));

    const first = session.submit("Yes");
    const second = session.submit("No"); // ignored: button is disabled, and the
    await second; //                        session itself refuses reentry
    expect(session.state.busy).toBe(true);
    release(ok({}));
    await first;

    const submits = api.calls.filter((c) => c.startsWith("answer"));
    expect(submits).toEqual(["answer tsk-000001 jane Yes"]);
  });

  it("ignores submits when no task is displayed", async () => {
    const api = new FakeApi();
    api.nextTaskQueue.push(ok(null));
    const session = new Session(api, "prj-1", memoryStore({ [WORKER_ID_KEY]: "jane" }));
    await session.refresh();
    await session.submit("Yes");
    expect(api.calls.filter((c) => c.startsWith("answer"))).toHaveLength(0);
  });

  it("turns a mid-submit connection failure into the retry screen", async () => {
    const api = new FakeApi();
    const session = await sessionShowingTask(api);
    api.submitQueue.push(netError());
    await session.submit("Yes");
    expect(session.state.screen.kind).toBe("connection-error");
    expect(session.state.busy).toBe(false);
  });
});
