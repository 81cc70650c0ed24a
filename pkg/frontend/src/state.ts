/** UI state machine: annotate, inspect, adjust, resubmit.
 *
 * One request is in flight at a time; submissions that arrive while loading
 * collapse into a single trailing run that uses the latest state
 * (queued-latest-wins).  Failures never clear the input text.
 */

import { ApiClient, ModelInfo, RecognizeResponse } from "./api.js";

export type Status =
  | { kind: "idle" }
  | { kind: "loading" }
  | { kind: "error"; message: string };

export interface UiState {
  inputText: string;
  selectedModel: string;
  selectedTagset: string;
  lastResponse: RecognizeResponse | null;
  status: Status;
}

export type Listener = (state: UiState) => void;

export class AppController {
  state: UiState = {
    inputText: "",
    selectedModel: "",
    selectedTagset: "",
    lastResponse: null,
    status: { kind: "idle" },
  };
  models: ModelInfo[] = [];

  private listeners: Listener[] = [];
  private inFlight = false;
  private pending = false;

  constructor(private api: ApiClient) {}

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private set(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    this.emit();
  }

  async init(): Promise<void> {
    try {
      this.models = await this.api.getModels();
    } catch (err) {
      this.set({ status: { kind: "error", message: String(err) } });
      return;
    }
    if (this.models.length > 0) {
      this.setModel(this.models[0].name);
    } else {
      this.emit();
    }
  }

  tagsetsFor(model: string): string[] {
    const info = this.models.find((m) => m.name === model);
    return info ? info.tagsets : [];
  }

  setModel(name: string): void {
    const tagsets = this.tagsetsFor(name);
    // the tagset must always be valid for the model, so it resets on change
    this.set({ selectedModel: name, selectedTagset: tagsets[0] ?? "" });
  }

  setTagset(name: string): void {
    if (this.tagsetsFor(this.state.selectedModel).includes(name)) {
      this.set({ selectedTagset: name });
    }
  }

  setInput(text: string): void {
    this.set({ inputText: text });
  }

  async submit(): Promise<void> {
    if (this.inFlight) {
      this.pending = true;
      return;
    }
    this.inFlight = true;
    this.set({ status: { kind: "loading" } });
    try {
      const response = await this.api.recognize({
        data: this.state.inputText,
        model: this.state.selectedModel,
        tagset: this.state.selectedTagset || undefined,
      });
      this.set({ lastResponse: response, status: { kind: "idle" } });
    } catch (err) {
      // input text is untouched; only the status changes
      this.set({ status: { kind: "error", message: String(err) } });
    } finally {
      this.inFlight = false;
    }
    if (this.pending) {
      this.pending = false;
      void this.submit();
    }
  }
}
