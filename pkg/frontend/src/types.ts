export interface Viewport {
  width: number;
  height: number;
}

export interface CompareOptions {
  viewport?: Viewport;
  /** "auto" picks the browser engine when one can launch, else the DOM engine. */
  engine?: "auto" | "browser" | "dom";
  /** Scripting on by default; switching it off is only meaningful for
   * probing noscript-based hiding, which is flagged rather than failed. */
  javascript?: boolean;
  /** Delay after the load event before sampling, so load-time restoration
   * scripts have finished. */
  settleMs?: number;
  /** Maximum fraction of differing pixels for a pass. */
  pixelTolerance?: number;
}

export type PixelStatus = "compared" | "skipped-no-browser" | "skipped-dom-engine";

export interface AttributeRestoration {
  /** Stable join key: element kind plus document-order index. */
  key: string;
  attribute: string;
  original: string | null;
  manipulated: string | null;
  equal: boolean;
}

export interface RenderComparison {
  originalPath: string;
  manipulatedPath: string;
  engine: "browser" | "dom";
  pixelStatus: PixelStatus;
  pixelDiffRatio: number | null;
  visibleTextEqual: boolean;
  /** First point of divergence, as evidence; null when equal. */
  visibleTextDiff: string | null;
  restoredAttributes: AttributeRestoration[];
  attributesEqual: boolean;
  flags: string[];
  passed: boolean;
}

export interface SuiteReport {
  comparisons: RenderComparison[];
  unmatched: string[];
  passed: number;
  failed: number;
  flagged: number;
}

export const DEFAULT_VIEWPORT: Viewport = { width: 1280, height: 800 };
export const DEFAULT_SETTLE_MS = 250;
export const DEFAULT_PIXEL_TOLERANCE = 0.001;
