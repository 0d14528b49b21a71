/** Display <-> canonical conversion.
 *
 * The server speaks a fixed 1024x1024 canonical frame; the browser renders the
 * image into some display rectangle. Conversion scales each axis independently,
 * so any viewport size works and a round trip is exact up to float rounding
 * (far below the 0.5 px the UI is allowed).
 */

import type { Box } from "./types.js";

export const CANONICAL_WIDTH = 1024;
export const CANONICAL_HEIGHT = 1024;

/** Size of the rectangle the image is drawn into, in display pixels. */
export interface DisplayRect {
  width: number;
  height: number;
}

function scaled(box: Box, sx: number, sy: number): Box {
  return {
    xMin: box.xMin * sx,
    yMin: box.yMin * sy,
    xMax: box.xMax * sx,
    yMax: box.yMax * sy,
  };
}

export function displayToCanonical(box: Box, view: DisplayRect): Box {
  return scaled(box, CANONICAL_WIDTH / view.width, CANONICAL_HEIGHT / view.height);
}

export function canonicalToDisplay(box: Box, view: DisplayRect): Box {
  return scaled(box, view.width / CANONICAL_WIDTH, view.height / CANONICAL_HEIGHT);
}

/** Normalize a drag gesture (any corner pair) into an ordered box. */
export function orderedBox(x0: number, y0: number, x1: number, y1: number): Box {
  return {
    xMin: Math.min(x0, x1),
    yMin: Math.min(y0, y1),
    xMax: Math.max(x0, x1),
    yMax: Math.max(y0, y1),
  };
}

export function isDegenerate(box: Box): boolean {
  return !(box.xMin < box.xMax) || !(box.yMin < box.yMax);
}
