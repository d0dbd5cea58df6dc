/** What we sample from a loaded page: the rendered text and the live
 * values of everything the rewrites restore at load time (form actions,
 * the title, disabled flags). Runs inside any DOM, browser or jsdom. */

export interface PageSnapshot {
  title: string;
  visibleText: string;
  /** form-<index> -> action attribute (null when absent) */
  formActions: Record<string, string | null>;
  /** button-<i> / input-<i> -> disabled attribute present */
  disabledControls: Record<string, boolean>;
  hasNoscript: boolean;
}

/** Serialized into the page context by the browser engine, called directly
 * by the jsdom engine. Keep it dependency-free and ES5-ish. */
export function samplePage(doc: Document, javascriptEnabled: boolean): PageSnapshot {
  const win = doc.defaultView;

  const hiddenIds = new Set<string>();
  const styleRule = /#([^\s{}]+)\s*\{[^}]*(?:display\s*:\s*none|visibility\s*:\s*hidden)/gi;
  for (const style of Array.from(doc.querySelectorAll("style"))) {
    const text = style.textContent ?? "";
    for (let m = styleRule.exec(text); m; m = styleRule.exec(text)) {
      hiddenIds.add(m[1]);
    }
    styleRule.lastIndex = 0;
  }

  function isHidden(el: Element): boolean {
    if (el.hasAttribute("hidden")) return true;
    const inline = (el.getAttribute("style") ?? "").toLowerCase();
    if (/display\s*:\s*none/.test(inline) || /visibility\s*:\s*hidden/.test(inline)) {
      return true;
    }
    const id = el.getAttribute("id");
    if (id && hiddenIds.has(id)) return true;
    if (win && "getComputedStyle" in win) {
      try {
        const computed = win.getComputedStyle(el);
        if (computed.display === "none" || computed.visibility === "hidden") return true;
      } catch {
        // jsdom can throw on detached nodes; fall through to the static checks
      }
    }
    return false;
  }

  const parts: string[] = [];
  function walk(node: Node): void {
    for (const child of Array.from(node.childNodes)) {
      if (child.nodeType === 3) {
        parts.push(child.textContent ?? "");
      } else if (child.nodeType === 1) {
        const el = child as Element;
        const tag = el.tagName.toLowerCase();
        if (tag === "script" || tag === "style") continue;
        // With scripting on, noscript content never renders.
        if (tag === "noscript" && javascriptEnabled) continue;
        if (isHidden(el)) continue;
        walk(el);
      }
    }
  }
  if (doc.body) walk(doc.body);

  const formActions: Record<string, string | null> = {};
  Array.from(doc.querySelectorAll("form")).forEach((form, i) => {
    formActions[`form-${i}`] = form.getAttribute("action");
  });

  const disabledControls: Record<string, boolean> = {};
  Array.from(doc.querySelectorAll("button")).forEach((el, i) => {
    disabledControls[`button-${i}`] = el.hasAttribute("disabled");
  });
  Array.from(doc.querySelectorAll("input")).forEach((el, i) => {
    disabledControls[`input-${i}`] = el.hasAttribute("disabled");
  });

  return {
    title: doc.title ?? "",
    visibleText: parts.join(" ").replace(/\s+/g, " ").trim(),
    formActions,
    disabledControls,
    hasNoscript: doc.querySelectorAll("noscript").length > 0,
  };
}
