import { describe, expect, it } from "vitest";

import {
  checkAnswer,
  controlsFor,
  escapeHtml,
  objectText,
  renderTemplate,
} from "../src/render.js";

describe("renderTemplate", () => {
  it("substitutes a string object into the placeholder", () => {
    const html = renderTemplate(
      '<img src="{{object}}" alt="task image" />',
      "http://img/1.jpg",
    );
    expect(html).toBe('<img src="http://img/1.jpg" alt="task image" />');
  });

  it("replaces every occurrence of the placeholder", () => {
    const html = renderTemplate("<p>{{object}}</p><p>{{object}}</p>", "x");
    expect(html).toBe("<p>x</p><p>x</p>");
  });

  it("escapes markup in the object, keeping the template itself intact", () => {
    const html = renderTemplate("<p>{{object}}</p>", '<script>"a"&\'b\'</script>');
    expect(html).toBe(
      "<p>&lt;script&gt;&quot;a&quot;&amp;&#39;b&#39;&lt;/script&gt;</p>",
    );
  });

  it("renders non-string objects as JSON", () => {
    const html = renderTemplate(
      "<p>{{object}}</p>",
      { left: "iPad 2", right: "iPad two" },
    );
    expect(html).toBe(
      "<p>{&quot;left&quot;:&quot;iPad 2&quot;,&quot;right&quot;:&quot;iPad two&quot;}</p>",
    );
  });

  it("leaves templates without the placeholder unchanged", () => {
    expect(renderTemplate("<p>static</p>", "x")).toBe("<p>static</p>");
  });
});

describe("objectText / escapeHtml", () => {
  it("keeps strings verbatim and serializes everything else", () => {
    expect(objectText("plain")).toBe("plain");
    expect(objectText(42)).toBe("42");
    expect(objectText(["a", "b"])).toBe('["a","b"]');
  });

  it("escapes all five significant characters", () => {
    expect(escapeHtml(`&<>"'`)).toBe("&amp;&lt;&gt;&quot;&#39;");
  });
});

describe("controlsFor", () => {
  it("maps a labels schema to buttons", () => {
    expect(controlsFor({ type: "labels", labels: ["Yes", "No"] })).toEqual({
      kind: "labels",
      labels: ["Yes", "No"],
    });
  });

  it("maps a text schema to a text box", () => {
    expect(controlsFor({ type: "text" })).toEqual({ kind: "text" });
  });
});

describe("checkAnswer", () => {
  it("accepts a known label and rejects an unknown one", () => {
    const schema = { type: "labels", labels: ["Yes", "No"] } as const;
    expect(checkAnswer(schema, "Yes")).toBeNull();
    expect(checkAnswer(schema, "Maybe")).toMatch(/one of/);
  });

  it("rejects blank free text", () => {
    expect(checkAnswer({ type: "text" }, "  ")).toMatch(/empty/);
    expect(checkAnswer({ type: "text" }, "a fine answer")).toBeNull();
  });
});
