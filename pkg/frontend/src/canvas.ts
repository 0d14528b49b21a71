/** Box rendering for the two panels. Kept behind a minimal drawing interface
 * so tests can record calls without a real canvas. */

import { canonicalToDisplay, type DisplayRect } from "./coords.js";
import type { CanvasAnnotation, Referral } from "./types.js";

export interface Draw2D {
  lineWidth: number;
  strokeStyle: string;
  fillStyle: string;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  fillText(text: string, x: number, y: number): void;
}

const ANNOTATION_COLOR = "#2e7d32";
const REFERRAL_COLOR = "#c62828";
const RESOLVED_COLOR = "#9e9e9e";

function drawBox(ctx: Draw2D, view: DisplayRect, box: CanvasAnnotation["box"], color: string, tag: string): void {
  const d = canonicalToDisplay(box, view);
  ctx.strokeStyle = color;
  ctx.fillStyle = color;
  ctx.strokeRect(d.xMin, d.yMin, d.xMax - d.xMin, d.yMax - d.yMin);
  if (tag) {
    ctx.fillText(tag, d.xMin + 2, Math.max(10, d.yMin - 4));
  }
}

export function renderAnnotations(ctx: Draw2D, view: DisplayRect, annotations: CanvasAnnotation[]): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.lineWidth = 2;
  ctx.font = "12px sans-serif";
  for (const a of annotations) {
    drawBox(ctx, view, a.box, ANNOTATION_COLOR, a.label ?? "");
  }
}

export function renderReferrals(ctx: Draw2D, view: DisplayRect, referrals: Referral[]): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.lineWidth = 2;
  ctx.font = "12px sans-serif";
  for (const r of referrals) {
    const color = r.status === "pending" ? REFERRAL_COLOR : RESOLVED_COLOR;
    const tag = `${r.referralId} (${r.confidence.toFixed(2)})${r.status === "pending" ? "" : ` ${r.status}`}`;
    drawBox(ctx, view, r.box, color, tag);
  }
}
