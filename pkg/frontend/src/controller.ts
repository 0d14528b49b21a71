/** Session state machine behind the two-panel review screen.
 *
 * Left panel: the radiologist's annotations. Right panel: server-issued
 * referrals with accept/reject controls. Decisions are never applied
 * optimistically; state only changes after the server acknowledges, and a
 * refresh re-reads the authoritative session snapshot. Failed calls keep
 * local annotations intact and surface the server's message verbatim.
 */

import { ApiError, boxToWire, ReviewApi } from "./api.js";
import { displayToCanonical, isDegenerate, type DisplayRect } from "./coords.js";
import type { Box, CanvasAnnotation, Referral } from "./types.js";

export class ReviewController {
  sessionId: string | null = null;
  version = 0;
  annotations: CanvasAnnotation[] = [];
  referrals: Referral[] = [];
  gateVerdict: string | null = null;
  lastError: string | null = null;

  constructor(private readonly api: ReviewApi) {}

  async startSession(options: {
    imageId: string;
    originalWidth: number;
    originalHeight: number;
    imageData?: string;
    imageRef?: string;
  }): Promise<void> {
    const created = await this.api.createSession(options);
    this.sessionId = created.sessionId;
    this.version = created.version;
    this.annotations = [];
    this.referrals = [];
    this.lastError = null;
  }

  /** Resume an existing session; undecided referrals come back as pending. */
  async loadExisting(sessionId: string): Promise<void> {
    this.sessionId = sessionId;
    await this.refresh();
    this.lastError = null;
  }

  /** Add a box drawn in display coordinates; stored canonically, marked dirty. */
  addAnnotation(displayBox: Box, label: string | null, view: DisplayRect): CanvasAnnotation {
    const canonical = displayToCanonical(displayBox, view);
    if (isDegenerate(canonical)) {
      throw new RangeError("annotation box has no area");
    }
    const annotation: CanvasAnnotation = { box: canonical, label, dirty: true };
    this.annotations.push(annotation);
    return annotation;
  }

  removeAnnotation(index: number): void {
    this.annotations.splice(index, 1);
    for (const a of this.annotations) {
      a.dirty = true; // the server set no longer matches until the next PUT
    }
  }

  get hasDirtyAnnotations(): boolean {
    return this.annotations.some((a) => a.dirty);
  }

  private requireSession(): string {
    if (this.sessionId === null) {
      throw new Error("no active session");
    }
    return this.sessionId;
  }

  async submitAnnotations(): Promise<boolean> {
    const sessionId = this.requireSession();
    const wire = this.annotations.map((a) => boxToWire(a.box, a.label));
    try {
      this.version = await this.api.putAnnotations(sessionId, wire, this.version);
    } catch (error) {
      this.recordError(error);
      return false;
    }
    for (const a of this.annotations) {
      a.dirty = false;
    }
    this.lastError = null;
    return true;
  }

  /** Push any unsaved boxes, then ask the server for referrals. */
  async requestRecommendations(): Promise<boolean> {
    const sessionId = this.requireSession();
    if (this.hasDirtyAnnotations || this.version <= 1) {
      if (!(await this.submitAnnotations())) {
        return false; // annotations stay local; error already recorded
      }
    }
    try {
      const result = await this.api.requestRecommendations(sessionId);
      this.gateVerdict = result.gateVerdict;
      this.referrals = result.referrals;
      this.lastError = null;
      return true;
    } catch (error) {
      this.recordError(error);
      return false;
    }
  }

  /**
   * Accept one referral, optionally with an adjusted box (display coords) and
   * a label picked in the dialog. The annotation appears only after the
   * server confirms and the snapshot is re-read.
   */
  async accept(
    referralId: string,
    adjusted?: { displayBox: Box; view: DisplayRect },
    label?: string,
  ): Promise<boolean> {
    const sessionId = this.requireSession();
    const wireBox =
      adjusted === undefined
        ? undefined
        : boxToWire(displayToCanonical(adjusted.displayBox, adjusted.view), label ?? null);
    try {
      this.version = await this.api.decide(sessionId, referralId, "accept", wireBox, label);
      await this.refresh();
      this.lastError = null;
      return true;
    } catch (error) {
      this.recordError(error);
      return false;
    }
  }

  /** Reject one referral; the left panel is untouched by construction. */
  async reject(referralId: string): Promise<boolean> {
    const sessionId = this.requireSession();
    try {
      await this.api.decide(sessionId, referralId, "reject");
      await this.refresh();
      this.lastError = null;
      return true;
    } catch (error) {
      this.recordError(error);
      return false;
    }
  }

  /** Re-read the authoritative snapshot: annotations, version, referral statuses. */
  async refresh(): Promise<void> {
    const sessionId = this.requireSession();
    const snapshot = await this.api.getSession(sessionId);
    this.version = snapshot.version;
    this.annotations = snapshot.annotations.map((a) => ({ box: a.box, label: a.label, dirty: false }));
    const decisionByReferral = new Map(snapshot.decisions.map((d) => [d.referralId, d.action]));
    this.referrals = snapshot.lastReferrals.map((r) => {
      const action = decisionByReferral.get(r.referralId);
      return { ...r, status: action === undefined ? "pending" : action === "accept" ? "accepted" : "rejected" };
    });
  }

  get pendingReferrals(): Referral[] {
    return this.referrals.filter((r) => r.status === "pending");
  }

  private recordError(error: unknown): void {
    if (error instanceof ApiError) {
      this.lastError = `${error.code}: ${error.message}`;
    } else {
      this.lastError = error instanceof Error ? error.message : String(error);
    }
  }
}
