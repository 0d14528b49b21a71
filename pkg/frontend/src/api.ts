/** Thin typed client for the review service HTTP API.
 *
 * Maps wire snake_case to client camelCase and turns the server's error
 * envelope into ApiError. No referral logic lives here or anywhere else in
 * the client; the server is the only place referrals are computed.
 */

import type { Box, Referral } from "./types.js";

export interface WireBox {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
  label?: string | null;
}

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = typeof fetch;

export function boxToWire(box: Box, label: string | null): WireBox {
  const wire: WireBox = { x_min: box.xMin, y_min: box.yMin, x_max: box.xMax, y_max: box.yMax };
  if (label !== null) {
    wire.label = label;
  }
  return wire;
}

export function wireToBox(wire: { x_min: number; y_min: number; x_max: number; y_max: number }): Box {
  return { xMin: wire.x_min, yMin: wire.y_min, xMax: wire.x_max, yMax: wire.y_max };
}

export interface CreateSessionResult {
  sessionId: string;
  version: number;
}

export interface RecommendationResult {
  annotationVersion: number;
  gateVerdict: string;
  cached: boolean;
  referrals: Referral[];
}

export interface SessionSnapshot {
  sessionId: string;
  imageId: string;
  originalWidth: number;
  originalHeight: number;
  version: number;
  annotations: { box: Box; label: string | null }[];
  /** Referrals from the most recent recommendation round, if any. */
  lastReferrals: Referral[];
  decisions: { referralId: string; action: "accept" | "reject" }[];
}

interface WireReferral {
  x_min: number;
  y_min: number;
  x_max: number;
  y_max: number;
  confidence: number;
  label?: string | null;
  referral_id: string;
}

function toReferral(wire: WireReferral): Referral {
  return {
    referralId: wire.referral_id,
    box: wireToBox(wire),
    confidence: wire.confidence,
    label: wire.label ?? null,
    status: "pending",
  };
}

export class ReviewApi {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = fetch,
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(`${this.base}${path}`, init);
    const payload = await response.json().catch(() => ({}));
    if (!response.ok) {
      const error = payload?.error;
      throw new ApiError(
        error?.code ?? `http-${response.status}`,
        error?.message ?? `request failed with HTTP ${response.status}`,
        response.status,
      );
    }
    return payload;
  }

  async createSession(options: {
    imageId: string;
    originalWidth: number;
    originalHeight: number;
    imageData?: string;
    imageRef?: string;
  }): Promise<CreateSessionResult> {
    const body: Record<string, unknown> = {
      image_id: options.imageId,
      original_width: options.originalWidth,
      original_height: options.originalHeight,
    };
    if (options.imageData !== undefined) body.image_data = options.imageData;
    if (options.imageRef !== undefined) body.image_ref = options.imageRef;
    const payload = await this.request("POST", "/sessions", body);
    return { sessionId: payload.session_id, version: payload.version };
  }

  async putAnnotations(sessionId: string, boxes: WireBox[], baseVersion?: number): Promise<number> {
    const body: Record<string, unknown> = { boxes };
    if (baseVersion !== undefined) body.base_version = baseVersion;
    const payload = await this.request("PUT", `/sessions/${sessionId}/annotations`, body);
    return payload.version;
  }

  async requestRecommendations(sessionId: string): Promise<RecommendationResult> {
    const payload = await this.request("POST", `/sessions/${sessionId}/recommendations`);
    return {
      annotationVersion: payload.annotation_version,
      gateVerdict: payload.gate_verdict,
      cached: payload.cached,
      referrals: payload.referrals.map(toReferral),
    };
  }

  async decide(
    sessionId: string,
    referralId: string,
    action: "accept" | "reject",
    adjustedBox?: WireBox,
    label?: string,
  ): Promise<number> {
    const body: Record<string, unknown> = { action };
    if (adjustedBox !== undefined) body.adjusted_box = adjustedBox;
    if (label !== undefined) body.label = label;
    const payload = await this.request(
      "POST",
      `/sessions/${sessionId}/referrals/${referralId}/decision`,
      body,
    );
    return payload.version;
  }

  async getSession(sessionId: string): Promise<SessionSnapshot> {
    const payload = await this.request("GET", `/sessions/${sessionId}`);
    const rounds = payload.recommendations ?? [];
    const last = rounds.length > 0 ? rounds[rounds.length - 1] : null;
    return {
      sessionId: payload.session_id,
      imageId: payload.image_id,
      originalWidth: payload.original_width,
      originalHeight: payload.original_height,
      version: payload.version,
      annotations: payload.annotations.boxes.map((b: WireBox) => ({
        box: wireToBox(b),
        label: b.label ?? null,
      })),
      lastReferrals: last === null ? [] : last.referrals.map(toReferral),
      decisions: (payload.decisions ?? []).map((d: { referral_id: string; action: "accept" | "reject" }) => ({
        referralId: d.referral_id,
        action: d.action,
      })),
    };
  }
}
