/** Shared client-side domain types. All server geometry is in the canonical frame. */

export interface Box {
  xMin: number;
  yMin: number;
  xMax: number;
  yMax: number;
}

/** A box the radiologist drew (or accepted), tracked against the server copy. */
export interface CanvasAnnotation {
  box: Box;
  label: string | null;
  /** True until the box has been persisted via PUT or confirmed by a refresh. */
  dirty: boolean;
}

export type ReferralStatus = "pending" | "accepted" | "rejected";

export interface Referral {
  referralId: string;
  box: Box;
  confidence: number;
  label: string | null;
  status: ReferralStatus;
}

export const ABNORMALITY_CLASSES = [
  "Aortic enlargement",
  "Atelectasis",
  "Calcification",
  "Cardiomegaly",
  "Consolidation",
  "ILD",
  "Infiltration",
  "Lung Opacity",
  "Nodule/Mass",
  "Other lesion",
  "Pleural effusion",
  "Pleural thickening",
  "Pneumothorax",
  "Pulmonary fibrosis",
] as const;

export const ANY_ABNORMALITY = "abnormal";

export type KnownLabel = (typeof ABNORMALITY_CLASSES)[number] | typeof ANY_ABNORMALITY;
