#!/usr/bin/env node
/** render-check CLI.
 *
 *   render-check compare ORIGINAL.html MANIPULATED.html [--engine auto|dom|browser]
 *   render-check suite ORIGINAL_DIR MANIPULATED_DIR --out REPORT_DIR
 *
 * Exit codes: 0 all comparisons pass (or nothing to compare), 1 failures,
 * 2 usage error.
 */

import { closeBrowser } from "./browser-engine.js";
import { comparePages } from "./compare.js";
import { writeReports } from "./report.js";
import { runSuite } from "./suite.js";
import { CompareOptions } from "./types.js";

interface Parsed {
  positional: string[];
  flags: Record<string, string | boolean>;
}

function parseArgs(argv: string[]): Parsed {
  const positional: string[] = [];
  const flags: Record<string, string | boolean> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg.startsWith("--")) {
      const key = arg.slice(2);
      const next = argv[i + 1];
      if (next !== undefined && !next.startsWith("--")) {
        flags[key] = next;
        i++;
      } else {
        flags[key] = true;
      }
    } else {
      positional.push(arg);
    }
  }
  return { positional, flags };
}

function options(flags: Record<string, string | boolean>): CompareOptions {
  const opts: CompareOptions = {};
  if (typeof flags.engine === "string") {
    opts.engine = flags.engine as CompareOptions["engine"];
  }
  if (typeof flags.viewport === "string") {
    const [w, h] = flags.viewport.split("x").map(Number);
    if (!w || !h) throw new Error(`bad --viewport, expected WxH: ${flags.viewport}`);
    opts.viewport = { width: w, height: h };
  }
  if (typeof flags["settle-ms"] === "string") opts.settleMs = Number(flags["settle-ms"]);
  if (flags["no-javascript"]) opts.javascript = false;
  return opts;
}

async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  const { positional, flags } = parseArgs(rest);
  try {
    if (command === "compare" && positional.length === 2) {
      const result = await comparePages(positional[0], positional[1], options(flags));
      console.log(JSON.stringify(result, null, 2));
      return result.passed ? 0 : 1;
    }
    if (command === "suite" && positional.length === 2) {
      const report = await runSuite(positional[0], positional[1], options(flags));
      if (typeof flags.out === "string") await writeReports(report, flags.out);
      console.log(JSON.stringify({
        comparisons: report.comparisons.length,
        passed: report.passed,
        failed: report.failed,
        flagged: report.flagged,
        unmatched: report.unmatched.length,
      }));
      return report.failed === 0 ? 0 : 1;
    }
    console.error(
      "usage: render-check compare ORIGINAL MANIPULATED [--engine auto|dom|browser]\n" +
      "       render-check suite ORIGINAL_DIR MANIPULATED_DIR [--out DIR]",
    );
    return 2;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  } finally {
    await closeBrowser().catch(() => undefined);
  }
}

main(process.argv.slice(2)).then((code) => process.exit(code));
