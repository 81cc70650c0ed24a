import { describe, expect, it } from "vitest";

import { ApiClient, ModelInfo, RecognizeResponse } from "../src/api.js";
import { AppController, Status } from "../src/state.js";

const MODELS: ModelInfo[] = [
  { name: "multi", type: "flat", tagsets: ["conll", "uner", "onto"], languages: ["en"] },
  { name: "czech", type: "nested", tagsets: ["czner"], languages: ["cs"] },
];

interface StubOptions {
  failRecognize?: boolean;
  delayed?: boolean;
}

function stubApi(options: StubOptions = {}) {
  const calls: Array<Record<string, unknown>> = [];
  let release: (() => void) | null = null;
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    if (url.endsWith("/models")) {
      return new Response(JSON.stringify(MODELS), { status: 200 });
    }
    const body = JSON.parse(String(init?.body));
    calls.push(body);
    if (options.delayed) {
      await new Promise<void>((resolve) => {
        release = resolve;
      });
    }
    if (options.failRecognize) {
      return new Response(JSON.stringify({ detail: "boom" }), { status: 500 });
    }
    const payload: RecognizeResponse = {
      model: body.model,
      tagset: body.tagset ?? null,
      sentences: [
        {
          tokens: String(body.data).split(/\s+/).filter(Boolean),
          spans: [],
        },
      ],
    };
    return new Response(JSON.stringify(payload), { status: 200 });
  };
  return {
    api: new ApiClient("", fetchFn),
    calls,
    releaseCurrent: () => release && release(),
  };
}

describe("AppController", () => {
  it("loads models and picks the first model and tagset", async () => {
    const { api } = stubApi();
    const controller = new AppController(api);
    await controller.init();
    expect(controller.state.selectedModel).toBe("multi");
    expect(controller.state.selectedTagset).toBe("conll");
  });

  it("tagset options always mirror the /models listing", async () => {
    const { api } = stubApi();
    const controller = new AppController(api);
    await controller.init();
    for (const model of MODELS) {
      controller.setModel(model.name);
      expect(controller.tagsetsFor(controller.state.selectedModel)).toEqual(model.tagsets);
      expect(model.tagsets).toContain(controller.state.selectedTagset);
    }
  });

  it("model change resets the tagset to a valid one", async () => {
    const { api } = stubApi();
    const controller = new AppController(api);
    await controller.init();
    controller.setTagset("onto");
    expect(controller.state.selectedTagset).toBe("onto");
    controller.setModel("czech");
    expect(controller.state.selectedTagset).toBe("czner");
  });

  it("rejects tagsets that are invalid for the current model", async () => {
    const { api } = stubApi();
    const controller = new AppController(api);
    await controller.init();
    controller.setTagset("czner"); // belongs to the other model
    expect(controller.state.selectedTagset).toBe("conll");
  });

  it("successful submit passes idle -> loading -> idle and stores the response", async () => {
    const { api } = stubApi();
    const controller = new AppController(api);
    await controller.init();
    const transitions: Status["kind"][] = [];
    controller.onChange((s) => transitions.push(s.status.kind));
    controller.setInput("John runs");
    await controller.submit();
    expect(transitions).toContain("loading");
    expect(controller.state.status.kind).toBe("idle");
    expect(controller.state.lastResponse?.sentences[0].tokens).toEqual(["John", "runs"]);
  });

  it("failure sets an error status and preserves the input text", async () => {
    const { api } = stubApi({ failRecognize: true });
    const controller = new AppController(api);
    await controller.init();
    controller.setInput("precious draft text");
    await controller.submit();
    expect(controller.state.status.kind).toBe("error");
    expect(controller.state.inputText).toBe("precious draft text");
    expect(controller.state.lastResponse).toBeNull();
  });

  it("queues at most one trailing submit (latest wins)", async () => {
    const stub = stubApi({ delayed: true });
    const controller = new AppController(stub.api);
    await controller.init();
    controller.setInput("first");
    const p1 = controller.submit();
    controller.setInput("second");
    void controller.submit();
    controller.setInput("third");
    void controller.submit();
    expect(stub.calls.length).toBe(1);
    stub.releaseCurrent();
    await p1;
    // the queued run observes the latest input; re-release for it
    for (let i = 0; i < 20 && stub.calls.length < 2; i++) {
      stub.releaseCurrent();
      await new Promise((resolve) => setTimeout(resolve, 0));
    }
    expect(stub.calls.length).toBe(2);
    expect(stub.calls[1].data).toBe("third");
  });

  it("models request failure surfaces as error state", async () => {
    const api = new ApiClient("", async () => new Response("nope", { status: 503 }));
    const controller = new AppController(api);
    await controller.init();
    expect(controller.state.status.kind).toBe("error");
  });
});
