/** jsdom-backed page loading: executes inline scripts, fires the load
 * event, waits for the settle delay, then samples the page. No network:
 * external subresources are simply never fetched. */

import { readFile } from "node:fs/promises";
import { pathToFileURL } from "node:url";
import { JSDOM, VirtualConsole } from "jsdom";

import { PageSnapshot, samplePage } from "./snapshot.js";

export interface DomLoadOptions {
  javascript: boolean;
  settleMs: number;
}

export async function loadSnapshot(
  path: string,
  options: DomLoadOptions,
): Promise<PageSnapshot> {
  const html = await readFile(path, "utf-8");
  return snapshotFromHtml(html, pathToFileURL(path).href, options);
}

export async function snapshotFromHtml(
  html: string,
  url: string,
  options: DomLoadOptions,
): Promise<PageSnapshot> {
  const virtualConsole = new VirtualConsole(); // swallow page-side noise
  const dom = new JSDOM(html, {
    url,
    runScripts: options.javascript ? "dangerously" : undefined,
    pretendToBeVisual: true,
    virtualConsole,
  });
  try {
    await loaded(dom, options.settleMs);
    return samplePage(dom.window.document, options.javascript);
  } finally {
    dom.window.close();
  }
}

function loaded(dom: JSDOM, settleMs: number): Promise<void> {
  return new Promise((resolve) => {
    const finish = () => setTimeout(resolve, settleMs);
    const doc = dom.window.document;
    if (doc.readyState === "complete") {
      finish();
    } else {
      dom.window.addEventListener("load", finish);
      // Safety net: malformed pages that never reach load still settle.
      setTimeout(finish, Math.max(2000, settleMs * 4));
    }
  });
}
