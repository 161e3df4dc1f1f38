/**
 * Typed client for the platform's worker-facing HTTP endpoints.
 *
 * The worker UI issues exactly two of the documented endpoints:
 *
 *   GET  /api/projects/<project>/newtask?worker_id=<id>
 *   POST /api/tasks/<task>/answers
 *
 * Errors arrive as `{"error": code, "detail": text}` with a 4xx/5xx status;
 * they are surfaced as values, never thrown, so the session state machine can
 * branch on the error code (already_answered, task_complete, schema_violation).
 */

export type AnswerSchema =
  | { type: "labels"; labels: string[] }
  | { type: "text" };

export interface TaskView {
  task_id: string;
  project_id: string;
  fingerprint: string;
  payload: { object: unknown; [key: string]: unknown };
  n_assignments: number;
  template: string;
  schema: AnswerSchema;
}

export interface AssignmentView {
  task_id: string;
  worker_id: string;
  answer: unknown;
  submitted_at: string;
}

export interface ApiError {
  error: string;
  detail: string;
}

export type Fetched<T> =
  | { kind: "ok"; value: T }
  | { kind: "api-error"; error: ApiError }
  | { kind: "network-error"; detail: string };

export class PlatformApi {
  constructor(private readonly baseUrl: string = "") {}

  async nextTask(
    projectId: string,
    workerId: string,
  ): Promise<Fetched<TaskView | null>> {
    const url =
      `${this.baseUrl}/api/projects/${encodeURIComponent(projectId)}/newtask` +
      `?worker_id=${encodeURIComponent(workerId)}`;
    return this.request<TaskView | null>(
      url,
      undefined,
      (body) => (body as { task: TaskView | null }).task,
    );
  }

  async submitAnswer(
    taskId: string,
    workerId: string,
    answer: unknown,
  ): Promise<Fetched<AssignmentView>> {
    const url = `${this.baseUrl}/api/tasks/${encodeURIComponent(taskId)}/answers`;
    return this.request<AssignmentView>(
      url,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ worker_id: workerId, answer }),
      },
      (body) => body as AssignmentView,
    );
  }

  private async request<T>(
    url: string,
    init: RequestInit | undefined,
    pick: (body: unknown) => T,
  ): Promise<Fetched<T>> {
    let response: Response;
    try {
      response = await fetch(url, init);
    } catch (err) {
      return { kind: "network-error", detail: String(err) };
    }
    let body: unknown;
    try {
      body = await response.json();
    } catch {
      return {
        kind: "network-error",
        detail: `malformed response (HTTP ${response.status})`,
      };
    }
    if (!response.ok) {
      const partial = body as Partial<ApiError>;
      return {
        kind: "api-error",
        error: {
          error: partial.error ?? "error",
          detail: partial.detail ?? `HTTP ${response.status}`,
        },
      };
    }
    return { kind: "ok", value: pick(body) };
  }
}
