/** Headless-browser page loading via playwright-core. Only used when a
 * Chromium binary is actually launchable (CHROMIUM_PATH, the playwright
 * cache, or a system chromium); everything network-bound is stubbed so
 * runs stay offline and deterministic. */

import { existsSync } from "node:fs";
import { pathToFileURL } from "node:url";

import type { Browser } from "playwright-core";

import { PageSnapshot, samplePage } from "./snapshot.js";
import { Viewport } from "./types.js";

let cachedBrowser: Browser | null | undefined;

const SYSTEM_CHROMIUM = [
  "/usr/bin/chromium",
  "/usr/bin/chromium-browser",
  "/usr/bin/google-chrome",
];

async function launch(): Promise<Browser | null> {
  const { chromium } = await import("playwright-core");
  const explicit = process.env.CHROMIUM_PATH;
  const candidates = explicit ? [explicit] : [undefined, ...SYSTEM_CHROMIUM];
  for (const executablePath of candidates) {
    if (typeof executablePath === "string" && !existsSync(executablePath)) continue;
    try {
      return await chromium.launch({
        executablePath,
        args: ["--force-device-scale-factor=1", "--hide-scrollbars", "--disable-lcd-text"],
      });
    } catch {
      // try the next candidate
    }
  }
  return null;
}

export async function browserAvailable(): Promise<boolean> {
  if (cachedBrowser === undefined) cachedBrowser = await launch();
  return cachedBrowser !== null;
}

export async function closeBrowser(): Promise<void> {
  if (cachedBrowser) await cachedBrowser.close();
  cachedBrowser = undefined;
}

export interface BrowserCapture {
  snapshot: PageSnapshot;
  screenshot: Buffer;
}

export async function capture(
  path: string,
  viewport: Viewport,
  settleMs: number,
): Promise<BrowserCapture> {
  if (cachedBrowser === undefined) cachedBrowser = await launch();
  if (!cachedBrowser) throw new Error("no launchable browser");
  const context = await cachedBrowser.newContext({
    viewport,
    deviceScaleFactor: 1,
    reducedMotion: "reduce",
    javaScriptEnabled: true,
  });
  try {
    // Answer every non-local fetch with an empty 200 so external
    // subresources (injected pool links, hotlinked assets) cost nothing
    // and render identically run to run.
    await context.route("**/*", (route) => {
      if (route.request().url().startsWith("file://")) return route.continue();
      return route.fulfill({ status: 200, body: "" });
    });
    const page = await context.newPage();
    await page.goto(pathToFileURL(path).href, { waitUntil: "load", timeout: 15000 });
    await page.waitForTimeout(settleMs);
    await page.addStyleTag({ content: "*, *::before, *::after { animation: none !important; transition: none !important; caret-color: transparent !important; }" });
    const snapshot = (await page.evaluate(
      `(${samplePage.toString()})(document, true)`,
    )) as PageSnapshot;
    const screenshot = await page.screenshot({ fullPage: false, animations: "disabled" });
    return { snapshot, screenshot };
  } finally {
    await context.close();
  }
}
