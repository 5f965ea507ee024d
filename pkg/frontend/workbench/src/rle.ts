/** Row-major RLE masks as served by the segmentation API. */

export interface RleMask {
  w: number
  h: number
  counts: number[]
}

/**
 * Expand an RLE mask to one byte per pixel (0 or 1), row-major.
 *
 * counts alternate zero-run / one-run starting with zeros; only the
 * leading count may be 0. Throws on malformed masks rather than
 * rendering garbage.
 */
export function decodeRle(rle: RleMask): Uint8Array {
  const { w, h, counts } = rle
  if (w < 1 || h < 1) throw new Error(`bad RLE dims ${w}x${h}`)
  const total = counts.reduce((a, c) => a + c, 0)
  if (total !== w * h) {
    throw new Error(`RLE counts sum ${total}, expected ${w * h}`)
  }
  const out = new Uint8Array(w * h)
  let pos = 0
  for (let i = 0; i < counts.length; i++) {
    const run = counts[i]
    if (run < 0 || (run === 0 && i > 0)) {
      throw new Error(`invalid run length ${run} at index ${i}`)
    }
    if (i % 2 === 1) out.fill(1, pos, pos + run)
    pos += run
  }
  return out
}

/** Number of set pixels without expanding the mask. */
export function maskArea(rle: RleMask): number {
  let area = 0
  for (let i = 1; i < rle.counts.length; i += 2) area += rle.counts[i]
  return area
}
