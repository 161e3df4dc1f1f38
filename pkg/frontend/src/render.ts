/**
 * Pure rendering helpers: template substitution and answer controls.
 *
 * The presenter template is requester-authored HTML and is trusted as-is;
 * the task *object* substituted into it is data and is always escaped.
 */

import type { AnswerSchema } from "./api.js";

export const PLACEHOLDER = "{{object}}";

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (ch) => ESCAPES[ch] ?? ch);
}

/** String form of a task object: strings verbatim, anything else as JSON. */
export function objectText(object: unknown): string {
  return typeof object === "string" ? object : JSON.stringify(object);
}

/** Substitute the task object for every `{{object}}` in the template. */
export function renderTemplate(template: string, object: unknown): string {
  return template.split(PLACEHOLDER).join(escapeHtml(objectText(object)));
}

export type Controls =
  | { kind: "labels"; labels: string[] }
  | { kind: "text" };

export function controlsFor(schema: AnswerSchema): Controls {
  if (schema.type === "labels") {
    return { kind: "labels", labels: [...schema.labels] };
  }
  return { kind: "text" };
}

/** Client-side answer check; returns a problem description or null.
 *  The platform remains the authority — this only catches answers that
 *  would be rejected with certainty (saving a round trip). */
export function checkAnswer(schema: AnswerSchema, answer: string): string | null {
  if (schema.type === "labels" && !schema.labels.includes(answer)) {
    return `answer must be one of: ${schema.labels.join(", ")}`;
  }
  if (schema.type === "text" && answer.trim() === "") {
    return "answer must not be empty";
  }
  return null;
}
