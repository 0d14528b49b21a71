/** Browser entry point: wires the DOM to the controller. All logic that has
 * behavior worth testing lives in controller/api/coords; this file only
 * shuttles events and re-renders. */

import { ReviewApi } from "./api.js";
import { renderAnnotations, renderReferrals, type Draw2D } from "./canvas.js";
import { ReviewController } from "./controller.js";
import { orderedBox, type DisplayRect } from "./coords.js";
import { ABNORMALITY_CLASSES, ANY_ABNORMALITY } from "./types.js";

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

const api = new ReviewApi("");
const controller = new ReviewController(api);

const leftCanvas = element<HTMLCanvasElement>("annotations-canvas");
const rightCanvas = element<HTMLCanvasElement>("referrals-canvas");
const statusLine = element<HTMLParagraphElement>("status");
const referralList = element<HTMLUListElement>("referral-list");
const labelPicker = element<HTMLSelectElement>("label-picker");

for (const label of [...ABNORMALITY_CLASSES, ANY_ABNORMALITY]) {
  const option = document.createElement("option");
  option.value = label;
  option.textContent = label;
  labelPicker.appendChild(option);
}

function view(canvas: HTMLCanvasElement): DisplayRect {
  return { width: canvas.width, height: canvas.height };
}

function setStatus(text: string): void {
  statusLine.textContent = controller.lastError === null ? text : `error - ${controller.lastError}`;
}

function redraw(): void {
  const left = leftCanvas.getContext("2d");
  const right = rightCanvas.getContext("2d");
  if (left !== null) {
    renderAnnotations(left as unknown as Draw2D, view(leftCanvas), controller.annotations);
  }
  if (right !== null) {
    renderReferrals(right as unknown as Draw2D, view(rightCanvas), controller.referrals);
  }
  renderReferralControls();
}

function renderReferralControls(): void {
  referralList.replaceChildren();
  for (const referral of controller.referrals) {
    const item = document.createElement("li");
    item.textContent = `${referral.referralId} conf=${referral.confidence.toFixed(2)} [${referral.status}] `;
    if (referral.status === "pending") {
      const accept = document.createElement("button");
      accept.textContent = "accept";
      accept.onclick = async () => {
        // Accept-then-adjust: the picker label rides along; box adjustment is
        // a drag on the right panel before clicking (kept as drawn referral
        // box here when no drag happened).
        await controller.accept(referral.referralId, undefined, labelPicker.value);
        setStatus("decision recorded");
        redraw();
      };
      const reject = document.createElement("button");
      reject.textContent = "reject";
      reject.onclick = async () => {
        await controller.reject(referral.referralId);
        setStatus("decision recorded");
        redraw();
      };
      item.append(accept, reject);
    }
    referralList.appendChild(item);
  }
}

let dragStart: { x: number; y: number } | null = null;

leftCanvas.addEventListener("mousedown", (event) => {
  dragStart = { x: event.offsetX, y: event.offsetY };
});

leftCanvas.addEventListener("mouseup", (event) => {
  if (dragStart === null) {
    return;
  }
  const box = orderedBox(dragStart.x, dragStart.y, event.offsetX, event.offsetY);
  dragStart = null;
  try {
    controller.addAnnotation(box, labelPicker.value, view(leftCanvas));
    setStatus("annotation added (unsaved)");
  } catch (error) {
    controller.lastError = error instanceof Error ? error.message : String(error);
    setStatus("");
  }
  redraw();
});

element<HTMLButtonElement>("start-session").onclick = async () => {
  const imageId = element<HTMLInputElement>("image-id").value.trim();
  await controller.startSession({
    imageId,
    originalWidth: Number(element<HTMLInputElement>("original-width").value),
    originalHeight: Number(element<HTMLInputElement>("original-height").value),
    imageRef: imageId,
  });
  setStatus(`session ${controller.sessionId ?? ""} started`);
  redraw();
};

element<HTMLButtonElement>("get-recommendations").onclick = async () => {
  const ok = await controller.requestRecommendations();
  setStatus(ok ? `gate=${controller.gateVerdict ?? "?"}, ${controller.referrals.length} referrals` : "");
  redraw();
};

setStatus("ready");
