import { describe, expect, it } from "vitest";

import { ReviewApi, type FetchLike } from "../src/api.js";
import { ReviewController } from "../src/controller.js";

const VIEW = { width: 512, height: 512 }; // display px; canonical scale factor 2

interface Call {
  method: string;
  path: string;
  body: any;
}

type Handler = (body: any) => { status?: number; payload: unknown };

/** Routes "METHOD /path" to canned handlers and logs every call. */
function makeBackend(routes: Record<string, Handler>) {
  const calls: Call[] = [];
  const fetchFn: FetchLike = async (input, init) => {
    const url = String(input);
    const path = url.replace("http://test", "");
    const method = init?.method ?? "GET";
    const body = init?.body === undefined ? undefined : JSON.parse(String(init.body));
    calls.push({ method, path, body });
    const handler = routes[`${method} ${path}`];
    if (handler === undefined) {
      throw new Error(`unrouted: ${method} ${path}`);
    }
    const { status = 200, payload } = handler(body);
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return { calls, fetchFn };
}

function controllerWith(routes: Record<string, Handler>) {
  const backend = makeBackend(routes);
  const controller = new ReviewController(new ReviewApi("http://test", backend.fetchFn));
  return { controller, calls: backend.calls };
}

const SESSION_ROUTE: Record<string, Handler> = {
  "POST /sessions": () => ({ status: 201, payload: { session_id: "s-abc", version: 1 } }),
};

async function startedController(extraRoutes: Record<string, Handler>) {
  const { controller, calls } = controllerWith({ ...SESSION_ROUTE, ...extraRoutes });
  await controller.startSession({ imageId: "img-1", originalWidth: 2048, originalHeight: 2560, imageRef: "img-1" });
  return { controller, calls };
}

describe("session lifecycle", () => {
  it("creates a session with wire-format fields", async () => {
    const { controller, calls } = await startedController({});
    expect(controller.sessionId).toBe("s-abc");
    expect(controller.version).toBe(1);
    expect(calls[0]?.body).toEqual({
      image_id: "img-1",
      original_width: 2048,
      original_height: 2560,
      image_ref: "img-1",
    });
  });

  it("converts drawn display boxes to canonical coordinates", async () => {
    const { controller } = await startedController({});
    const annotation = controller.addAnnotation(
      { xMin: 300, yMin: 300, xMax: 350, yMax: 350 },
      "ILD",
      VIEW,
    );
    expect(annotation.box).toEqual({ xMin: 600, yMin: 600, xMax: 700, yMax: 700 });
    expect(annotation.dirty).toBe(true);
    expect(controller.hasDirtyAnnotations).toBe(true);
  });

  it("rejects zero-area drawings", async () => {
    const { controller } = await startedController({});
    expect(() => controller.addAnnotation({ xMin: 10, yMin: 10, xMax: 10, yMax: 40 }, null, VIEW)).toThrow(
      RangeError,
    );
    expect(controller.annotations).toHaveLength(0);
  });
});

describe("recommendations", () => {
  const referralPayload = {
    annotation_version: 2,
    gate_verdict: "unavailable",
    cached: false,
    referrals: [
      { x_min: 100, y_min: 100, x_max: 200, y_max: 200, confidence: 0.9, label: "abnormal", referral_id: "r-001-000" },
      { x_min: 400, y_min: 400, x_max: 500, y_max: 500, confidence: 0.8, referral_id: "r-001-001" },
    ],
  };

  it("pushes dirty annotations first, then stores the server's referrals verbatim", async () => {
    const { controller, calls } = await startedController({
      "PUT /sessions/s-abc/annotations": () => ({ payload: { session_id: "s-abc", version: 2, box_count: 1 } }),
      "POST /sessions/s-abc/recommendations": () => ({ payload: { session_id: "s-abc", ...referralPayload } }),
    });
    controller.addAnnotation({ xMin: 300, yMin: 300, xMax: 350, yMax: 350 }, "ILD", VIEW);

    expect(await controller.requestRecommendations()).toBe(true);

    const put = calls.find((c) => c.method === "PUT");
    expect(put?.body).toEqual({
      boxes: [{ x_min: 600, y_min: 600, x_max: 700, y_max: 700, label: "ILD" }],
      base_version: 1,
    });
    expect(controller.version).toBe(2);
    expect(controller.hasDirtyAnnotations).toBe(false);
    // The client never computes referrals; ids and geometry come from the server.
    expect(controller.referrals.map((r) => r.referralId)).toEqual(["r-001-000", "r-001-001"]);
    expect(controller.referrals[0]?.box).toEqual({ xMin: 100, yMin: 100, xMax: 200, yMax: 200 });
    expect(controller.referrals[1]?.label).toBeNull();
    expect(controller.gateVerdict).toBe("unavailable");
  });

  it("surfaces server errors verbatim and keeps annotations", async () => {
    const { controller } = await startedController({
      "PUT /sessions/s-abc/annotations": () => ({ payload: { session_id: "s-abc", version: 2, box_count: 1 } }),
      "POST /sessions/s-abc/recommendations": () => ({
        status: 503,
        payload: { error: { code: "detector-unavailable", message: "no detector provider configured" } },
      }),
    });
    controller.addAnnotation({ xMin: 300, yMin: 300, xMax: 350, yMax: 350 }, "ILD", VIEW);

    expect(await controller.requestRecommendations()).toBe(false);
    expect(controller.lastError).toBe("detector-unavailable: no detector provider configured");
    expect(controller.annotations).toHaveLength(1); // preserved locally
    expect(controller.referrals).toHaveLength(0);
  });

  it("keeps unsaved boxes dirty when the network drops before the PUT lands", async () => {
    const failing: FetchLike = async (input, init) => {
      if (init?.method === "POST" && String(input).endsWith("/sessions")) {
        return new Response(JSON.stringify({ session_id: "s-abc", version: 1 }), { status: 201 });
      }
      throw new TypeError("fetch failed");
    };
    const controller = new ReviewController(new ReviewApi("http://test", failing));
    await controller.startSession({ imageId: "img-1", originalWidth: 2048, originalHeight: 2560, imageRef: "img-1" });
    controller.addAnnotation({ xMin: 300, yMin: 300, xMax: 350, yMax: 350 }, "ILD", VIEW);

    expect(await controller.requestRecommendations()).toBe(false);
    expect(controller.lastError).toBe("fetch failed");
    expect(controller.annotations[0]?.dirty).toBe(true);
  });

  it("surfaces a stale base_version as a version conflict", async () => {
    const { controller } = await startedController({
      "PUT /sessions/s-abc/annotations": () => ({
        status: 409,
        payload: { error: { code: "version-conflict", message: "base_version 1 is stale; latest is 3" } },
      }),
    });
    controller.addAnnotation({ xMin: 10, yMin: 10, xMax: 60, yMax: 60 }, null, VIEW);
    expect(await controller.requestRecommendations()).toBe(false);
    expect(controller.lastError).toMatch(/^version-conflict/);
  });
});

describe("decisions", () => {
  interface BackendState {
    decided: { referral_id: string; action: string }[];
    boxes: any[];
  }

  function decidedRoutes(state: BackendState) {
    return {
      "POST /sessions/s-abc/referrals/r-001-000/decision": (body: any) => {
        state.decided.push({ referral_id: "r-001-000", action: body.action });
        if (body.action === "accept") {
          state.boxes = [...state.boxes, body.adjusted_box];
        }
        return { payload: { session_id: "s-abc", referral_id: "r-001-000", action: body.action, version: 3 } };
      },
      "POST /sessions/s-abc/referrals/r-001-001/decision": (body: any) => {
        state.decided.push({ referral_id: "r-001-001", action: body.action });
        return { payload: { session_id: "s-abc", referral_id: "r-001-001", action: body.action, version: 3 } };
      },
      "GET /sessions/s-abc": () => ({
        payload: {
          session_id: "s-abc",
          image_id: "img-1",
          original_width: 2048,
          original_height: 2560,
          version: 3,
          annotations: { version: 3, origin: "accept", boxes: state.boxes },
          recommendations: [
            {
              ordinal: 1,
              annotation_version: 2,
              gate_verdict: "unavailable",
              referrals: [
                { x_min: 100, y_min: 100, x_max: 200, y_max: 200, confidence: 0.9, referral_id: "r-001-000" },
                { x_min: 400, y_min: 400, x_max: 500, y_max: 500, confidence: 0.8, referral_id: "r-001-001" },
              ],
            },
          ],
          decisions: state.decided,
        },
      }),
    } satisfies Record<string, Handler>;
  }

  it("accept with adjustment sends the canonical adjusted box and waits for the snapshot", async () => {
    const state: BackendState = {
      decided: [],
      boxes: [{ x_min: 600, y_min: 600, x_max: 700, y_max: 700, label: "ILD" }],
    };
    const { controller, calls } = await startedController(decidedRoutes(state));

    const ok = await controller.accept(
      "r-001-000",
      { displayBox: { xMin: 55, yMin: 55, xMax: 105, yMax: 105 }, view: VIEW },
      "Lung Opacity",
    );

    expect(ok).toBe(true);
    const decision = calls.find((c) => c.path.endsWith("/decision"));
    expect(decision?.body).toEqual({
      action: "accept",
      adjusted_box: { x_min: 110, y_min: 110, x_max: 210, y_max: 210, label: "Lung Opacity" },
      label: "Lung Opacity",
    });
    // State reflects the server snapshot, not an optimistic local merge.
    expect(controller.annotations).toHaveLength(2);
    expect(controller.annotations.every((a) => !a.dirty)).toBe(true);
    expect(controller.referrals.find((r) => r.referralId === "r-001-000")?.status).toBe("accepted");
    expect(controller.version).toBe(3);
  });

  it("reject resolves the referral and leaves annotations untouched", async () => {
    const state: BackendState = {
      decided: [],
      boxes: [{ x_min: 600, y_min: 600, x_max: 700, y_max: 700, label: "ILD" }],
    };
    const { controller } = await startedController(decidedRoutes(state));

    expect(await controller.reject("r-001-001")).toBe(true);
    expect(controller.annotations).toHaveLength(1);
    expect(controller.referrals.find((r) => r.referralId === "r-001-001")?.status).toBe("rejected");
    expect(controller.pendingReferrals.map((r) => r.referralId)).toEqual(["r-001-000"]);
  });

  it("reloading a session restores undecided referrals as pending", async () => {
    const state: BackendState = {
      decided: [{ referral_id: "r-001-000", action: "accept" }],
      boxes: [
        { x_min: 600, y_min: 600, x_max: 700, y_max: 700, label: "ILD" },
        { x_min: 100, y_min: 100, x_max: 200, y_max: 200 },
      ],
    };
    const { controller } = await startedController(decidedRoutes(state));

    const fresh = controller; // same backend; simulate a reload path
    await fresh.loadExisting("s-abc");
    expect(fresh.annotations).toHaveLength(2);
    expect(fresh.referrals.find((r) => r.referralId === "r-001-000")?.status).toBe("accepted");
    expect(fresh.pendingReferrals.map((r) => r.referralId)).toEqual(["r-001-001"]);
  });
});
