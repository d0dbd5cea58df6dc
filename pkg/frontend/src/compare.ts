/** Pairwise page comparison: did the rewrite preserve what the user sees
 * and what the page does after load? */

import { PageSnapshot } from "./snapshot.js";
import { loadSnapshot } from "./dom-engine.js";
import {
  AttributeRestoration,
  CompareOptions,
  DEFAULT_PIXEL_TOLERANCE,
  DEFAULT_SETTLE_MS,
  DEFAULT_VIEWPORT,
  RenderComparison,
} from "./types.js";

function firstDivergence(a: string, b: string): string {
  const n = Math.max(a.length, b.length);
  for (let i = 0; i < n; i++) {
    if (a[i] !== b[i]) {
      const lo = Math.max(0, i - 30);
      return `at offset ${i}: original "...${a.slice(lo, i + 30)}" vs manipulated "...${b.slice(lo, i + 30)}"`;
    }
  }
  return "length mismatch";
}

/** Form actions that navigate nowhere: submitting goes to the current URL
 * regardless of the exact token, so rewrites may swap one dead token for
 * another without a restoration script and stay functionality-preserving. */
function isDeadAction(value: string | null): boolean {
  if (value === null) return false;
  const v = value.trim().toLowerCase();
  return v === "" || v.startsWith("#") || v === "about:blank" || v.startsWith("javascript");
}

function actionsEquivalent(a: string | null, b: string | null): boolean {
  return a === b || (isDeadAction(a) && isDeadAction(b));
}

export function diffSnapshots(
  original: PageSnapshot,
  manipulated: PageSnapshot,
): { attrs: AttributeRestoration[]; textEqual: boolean; textDiff: string | null } {
  const attrs: AttributeRestoration[] = [];
  const push = (key: string, attribute: string, a: string | null, b: string | null,
                equal: boolean = a === b) =>
    attrs.push({ key, attribute, original: a, manipulated: b, equal });

  push("document", "title", original.title, manipulated.title);
  for (const key of new Set([
    ...Object.keys(original.formActions),
    ...Object.keys(manipulated.formActions),
  ])) {
    const a = original.formActions[key] ?? null;
    const b = manipulated.formActions[key] ?? null;
    push(key, "action", a, b, actionsEquivalent(a, b));
  }
  for (const key of new Set([
    ...Object.keys(original.disabledControls),
    ...Object.keys(manipulated.disabledControls),
  ])) {
    push(key, "disabled",
         original.disabledControls[key] ? "disabled" : null,
         manipulated.disabledControls[key] ? "disabled" : null);
  }

  const textEqual = original.visibleText === manipulated.visibleText;
  return {
    attrs,
    textEqual,
    textDiff: textEqual ? null : firstDivergence(original.visibleText, manipulated.visibleText),
  };
}

export async function comparePages(
  originalPath: string,
  manipulatedPath: string,
  options: CompareOptions = {},
): Promise<RenderComparison> {
  const viewport = options.viewport ?? DEFAULT_VIEWPORT;
  const settleMs = options.settleMs ?? DEFAULT_SETTLE_MS;
  const javascript = options.javascript ?? true;
  const tolerance = options.pixelTolerance ?? DEFAULT_PIXEL_TOLERANCE;
  const flags: string[] = [];

  let engine: "browser" | "dom" = "dom";
  const wanted = options.engine ?? "auto";
  if (wanted === "browser" || (wanted === "auto" && javascript)) {
    const { browserAvailable } = await import("./browser-engine.js");
    if (await browserAvailable()) {
      engine = "browser";
    } else if (wanted === "browser") {
      throw new Error("browser engine requested but no browser can launch");
    } else {
      flags.push("pixel-comparison-skipped: no launchable browser");
    }
  }

  let originalSnap: PageSnapshot;
  let manipulatedSnap: PageSnapshot;
  let pixelDiffRatio: number | null = null;
  let pixelStatus: RenderComparison["pixelStatus"];

  if (engine === "browser") {
    const { capture } = await import("./browser-engine.js");
    const [a, b] = [
      await capture(originalPath, viewport, settleMs),
      await capture(manipulatedPath, viewport, settleMs),
    ];
    originalSnap = a.snapshot;
    manipulatedSnap = b.snapshot;
    const { diffPngBuffers } = await import("./pixel.js");
    pixelDiffRatio = diffPngBuffers(a.screenshot, b.screenshot).ratio;
    pixelStatus = "compared";
  } else {
    originalSnap = await loadSnapshot(originalPath, { javascript, settleMs });
    manipulatedSnap = await loadSnapshot(manipulatedPath, { javascript, settleMs });
    pixelStatus = javascript && wanted !== "dom" ? "skipped-no-browser" : "skipped-dom-engine";
  }

  let { attrs, textEqual, textDiff } = diffSnapshots(originalSnap, manipulatedSnap);

  if (!javascript && manipulatedSnap.hasNoscript && !originalSnap.hasNoscript) {
    // noscript-based hiding only holds with scripting on; flagged, not failed.
    flags.push("noscript-hiding-requires-javascript");
    textEqual = true;
    textDiff = null;
  }

  const attributesEqual = attrs.every((a) => a.equal);
  const pixelOk = pixelDiffRatio === null || pixelDiffRatio <= tolerance;
  return {
    originalPath,
    manipulatedPath,
    engine,
    pixelStatus,
    pixelDiffRatio,
    visibleTextEqual: textEqual,
    visibleTextDiff: textDiff,
    restoredAttributes: attrs,
    attributesEqual,
    flags,
    passed: textEqual && attributesEqual && pixelOk,
  };
}
