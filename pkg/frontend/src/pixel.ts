/** Screenshot comparison: fraction of differing pixels at equal viewport. */

import pixelmatch from "pixelmatch";
import { PNG } from "pngjs";

export interface PixelDiff {
  ratio: number;
  differingPixels: number;
  totalPixels: number;
}

export function diffPngBuffers(a: Buffer, b: Buffer): PixelDiff {
  const imgA = PNG.sync.read(a);
  const imgB = PNG.sync.read(b);
  if (imgA.width !== imgB.width || imgA.height !== imgB.height) {
    const total = Math.max(imgA.width * imgA.height, imgB.width * imgB.height);
    return { ratio: 1.0, differingPixels: total, totalPixels: total };
  }
  const total = imgA.width * imgA.height;
  const differing = pixelmatch(imgA.data, imgB.data, null, imgA.width, imgA.height, {
    threshold: 0.05,
  });
  return { ratio: total === 0 ? 0 : differing / total, differingPixels: differing, totalPixels: total };
}
