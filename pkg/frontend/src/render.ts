/** Renders annotated sentences as nested highlight markup.
 *
 * Every response span becomes exactly one `.ent` element carrying
 * data-start/data-end/data-type; spans containing other spans enclose them
 * in the DOM, which is what makes nesting depth visible (and testable).
 * A malformed response renders an error banner with the raw JSON preserved
 * in a collapsible details block instead of throwing.
 */

import type { RecognizeResponse, SentenceOut, SpanOut } from "./api.js";

function spanProblems(sentence: SentenceOut): string | null {
  const n = sentence.tokens.length;
  for (const span of sentence.spans) {
    if (
      !Number.isInteger(span.start) ||
      !Number.isInteger(span.end) ||
      span.start < 0 ||
      span.end > n ||
      span.start >= span.end ||
      typeof span.type !== "string" ||
      span.type.length === 0
    ) {
      return `invalid span ${JSON.stringify(span)} over ${n} tokens`;
    }
  }
  const sorted = canonicalOrder(sentence.spans);
  const open: SpanOut[] = [];
  for (const span of sorted) {
    while (open.length && open[open.length - 1].end <= span.start) {
      open.pop();
    }
    if (open.length && open[open.length - 1].end < span.end) {
      return `crossing spans ${JSON.stringify(open[open.length - 1])} / ${JSON.stringify(span)}`;
    }
    open.push(span);
  }
  return null;
}

export function validateResponse(resp: unknown): string | null {
  const r = resp as RecognizeResponse;
  if (!r || !Array.isArray(r.sentences)) {
    return "response has no sentences array";
  }
  for (const sentence of r.sentences) {
    if (!Array.isArray(sentence.tokens) || !Array.isArray(sentence.spans)) {
      return "sentence missing tokens or spans";
    }
    const problem = spanProblems(sentence);
    if (problem) {
      return problem;
    }
  }
  return null;
}

/** Outer-before-inner: start asc, length desc, type asc. */
function canonicalOrder(spans: SpanOut[]): SpanOut[] {
  return [...spans].sort(
    (a, b) =>
      a.start - b.start ||
      b.end - a.end ||
      (a.type < b.type ? -1 : a.type > b.type ? 1 : 0),
  );
}

function renderSentence(sentence: SentenceOut): HTMLElement {
  const root = document.createElement("p");
  root.className = "sentence";
  const ordered = canonicalOrder(sentence.spans);
  let next = 0;
  const openEnds: number[] = [];
  let container: HTMLElement = root;

  for (let t = 0; t < sentence.tokens.length; t++) {
    while (openEnds.length && openEnds[openEnds.length - 1] === t) {
      openEnds.pop();
      container = container.parentElement as HTMLElement;
    }
    while (next < ordered.length && ordered[next].start === t) {
      const span = ordered[next];
      const el = document.createElement("span");
      el.className = "ent";
      el.dataset.start = String(span.start);
      el.dataset.end = String(span.end);
      el.dataset.type = span.type;
      const tag = document.createElement("span");
      tag.className = "tag";
      tag.textContent = span.type;
      el.appendChild(tag);
      container.appendChild(el);
      container = el;
      openEnds.push(span.end);
      next++;
    }
    container.appendChild(document.createTextNode(sentence.tokens[t]));
    if (t + 1 < sentence.tokens.length) {
      container.appendChild(document.createTextNode(" "));
    }
  }
  while (openEnds.length) {
    openEnds.pop();
    container = container.parentElement as HTMLElement;
  }
  return root;
}

export function renderAnnotations(target: HTMLElement, resp: RecognizeResponse): void {
  target.replaceChildren();
  const problem = validateResponse(resp);
  if (problem) {
    const banner = document.createElement("div");
    banner.className = "error-banner";
    banner.textContent = `Malformed response: ${problem}`;
    const details = document.createElement("details");
    const summary = document.createElement("summary");
    summary.textContent = "raw response";
    const pre = document.createElement("pre");
    pre.className = "raw-json";
    pre.textContent = JSON.stringify(resp, null, 2);
    details.appendChild(summary);
    details.appendChild(pre);
    target.appendChild(banner);
    target.appendChild(details);
    return;
  }
  for (const sentence of resp.sentences) {
    target.appendChild(renderSentence(sentence));
  }
}
