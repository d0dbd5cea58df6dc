/** JSON and JUnit-style reporting for suite runs. */

import { mkdir, writeFile } from "node:fs/promises";
import { join } from "node:path";

import { RenderComparison, SuiteReport } from "./types.js";

function xmlEscape(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function failureMessage(c: RenderComparison): string {
  const reasons: string[] = [];
  if (!c.visibleTextEqual) reasons.push(`visible text differs (${c.visibleTextDiff})`);
  for (const attr of c.restoredAttributes.filter((a) => !a.equal)) {
    reasons.push(
      `${attr.key}[${attr.attribute}]: original ${JSON.stringify(attr.original)} ` +
      `vs manipulated ${JSON.stringify(attr.manipulated)}`,
    );
  }
  if (c.pixelDiffRatio !== null && c.pixelDiffRatio > 0.001) {
    reasons.push(`pixel diff ratio ${c.pixelDiffRatio}`);
  }
  return reasons.join("; ") || "unknown failure";
}

export function toJUnitXml(report: SuiteReport): string {
  const cases = report.comparisons
    .map((c) => {
      const name = xmlEscape(c.manipulatedPath);
      const props = c.flags.length
        ? `\n      <properties>${c.flags
            .map((f) => `<property name="flag" value="${xmlEscape(f)}"/>`)
            .join("")}</properties>`
        : "";
      if (c.passed) {
        return `    <testcase name="${name}" classname="render-check">${props}</testcase>`;
      }
      return (
        `    <testcase name="${name}" classname="render-check">${props}\n` +
        `      <failure message="${xmlEscape(failureMessage(c))}"/>\n` +
        `    </testcase>`
      );
    })
    .join("\n");
  return (
    `<?xml version="1.0" encoding="UTF-8"?>\n` +
    `<testsuite name="render-check" tests="${report.comparisons.length}" ` +
    `failures="${report.failed}">\n${cases}\n</testsuite>\n`
  );
}

export async function writeReports(report: SuiteReport, outDir: string): Promise<void> {
  await mkdir(outDir, { recursive: true });
  await writeFile(join(outDir, "report.json"), JSON.stringify(report, null, 2) + "\n");
  await writeFile(join(outDir, "junit.xml"), toJUnitXml(report));
}
