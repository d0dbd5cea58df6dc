/** Directory-pair runs: original/ and manipulated/ matched by filename. */

import { readdir } from "node:fs/promises";
import { join } from "node:path";

import { comparePages } from "./compare.js";
import { CompareOptions, SuiteReport } from "./types.js";

async function htmlFiles(dir: string): Promise<string[]> {
  try {
    const entries = await readdir(dir);
    return entries.filter((f) => f.endsWith(".html") || f.endsWith(".htm")).sort();
  } catch {
    return [];
  }
}

export async function runSuite(
  originalDir: string,
  manipulatedDir: string,
  options: CompareOptions = {},
): Promise<SuiteReport> {
  const originals = await htmlFiles(originalDir);
  const manipulated = new Set(await htmlFiles(manipulatedDir));

  const comparisons = [];
  const unmatched: string[] = [];
  for (const name of originals) {
    if (!manipulated.has(name)) {
      unmatched.push(join(originalDir, name));
      continue;
    }
    manipulated.delete(name);
    comparisons.push(
      await comparePages(join(originalDir, name), join(manipulatedDir, name), options),
    );
  }
  unmatched.push(...Array.from(manipulated).map((name) => join(manipulatedDir, name)));

  return {
    comparisons,
    unmatched,
    passed: comparisons.filter((c) => c.passed).length,
    failed: comparisons.filter((c) => !c.passed).length,
    flagged: comparisons.filter((c) => c.flags.length > 0).length,
  };
}
