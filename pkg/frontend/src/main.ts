import { ApiClient } from "./api.js";
import { renderAnnotations } from "./render.js";
import { AppController } from "./state.js";

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

export function wireUp(controller: AppController): void {
  const input = byId<HTMLTextAreaElement>("input-text");
  const modelSelect = byId<HTMLSelectElement>("model-select");
  const tagsetSelect = byId<HTMLSelectElement>("tagset-select");
  const submitButton = byId<HTMLButtonElement>("submit-button");
  const statusLine = byId<HTMLElement>("status-line");
  const output = byId<HTMLElement>("output");

  function fillSelect(select: HTMLSelectElement, values: string[], selected: string): void {
    select.replaceChildren();
    for (const value of values) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value;
      option.selected = value === selected;
      select.appendChild(option);
    }
  }

  controller.onChange((state) => {
    fillSelect(
      modelSelect,
      controller.models.map((m) => m.name),
      state.selectedModel,
    );
    fillSelect(tagsetSelect, controller.tagsetsFor(state.selectedModel), state.selectedTagset);
    if (state.status.kind === "error") {
      statusLine.textContent = `error: ${state.status.message}`;
      statusLine.className = "status error";
    } else {
      statusLine.textContent = state.status.kind;
      statusLine.className = `status ${state.status.kind}`;
    }
    submitButton.disabled = state.status.kind === "loading";
    if (state.status.kind === "idle" && state.lastResponse) {
      renderAnnotations(output, state.lastResponse);
    }
  });

  input.addEventListener("input", () => controller.setInput(input.value));
  modelSelect.addEventListener("change", () => controller.setModel(modelSelect.value));
  tagsetSelect.addEventListener("change", () => controller.setTagset(tagsetSelect.value));
  submitButton.addEventListener("click", () => void controller.submit());
}

if (typeof document !== "undefined" && document.getElementById("input-text")) {
  const controller = new AppController(new ApiClient());
  wireUp(controller);
  void controller.init();
}
