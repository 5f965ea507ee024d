/** Canvas overlay helpers: masks, heatmaps, prompt geometry.
 *
 * Everything returns plain { width, height, data } pixel buffers so the
 * logic is testable off-DOM; callers blit them via
 * ctx.putImageData(new ImageData(data, width, height), 0, 0).
 */

import { SimilarityMapJson, TraceBox, TracePoint } from './client'
import { RleMask, decodeRle } from './rle'

export interface PixelBuffer {
  width: number
  height: number
  data: Uint8ClampedArray
}

export type Rgba = [number, number, number, number]

export const MASK_COLOR: Rgba = [66, 135, 245, 160]
export const GT_COLOR: Rgba = [52, 199, 89, 120]

/** Decode a base64 little-endian f32 payload. */
export function decodeFloats(b64: string, count: number): Float32Array {
  const binary = atob(b64)
  if (binary.length !== count * 4) {
    throw new Error(`expected ${count * 4} bytes, got ${binary.length}`)
  }
  const bytes = new Uint8Array(binary.length)
  for (let i = 0; i < binary.length; i++) bytes[i] = binary.charCodeAt(i)
  return new Float32Array(bytes.buffer)
}

/** Tint set pixels with the given color; unset pixels stay transparent. */
export function maskToPixels(rle: RleMask, color: Rgba = MASK_COLOR): PixelBuffer {
  const bits = decodeRle(rle)
  const data = new Uint8ClampedArray(rle.w * rle.h * 4)
  for (let i = 0; i < bits.length; i++) {
    if (!bits[i]) continue
    data.set(color, i * 4)
  }
  return { width: rle.w, height: rle.h, data }
}

/** Fixed blue-to-red colormap over the normalized [0, 1] map values. */
export function heatmapToPixels(map: SimilarityMapJson, alpha = 140): PixelBuffer {
  const values = decodeFloats(map.values_f32_b64, map.w * map.h)
  const data = new Uint8ClampedArray(map.w * map.h * 4)
  for (let i = 0; i < values.length; i++) {
    const v = Math.min(1, Math.max(0, values[i]))
    data[i * 4] = Math.round(255 * v)
    data[i * 4 + 2] = Math.round(255 * (1 - v))
    data[i * 4 + 3] = alpha
  }
  return { width: map.w, height: map.h, data }
}

export interface BoxGlyph {
  x: number
  y: number
  width: number
  height: number
  label: string
}

export interface PointGlyph {
  x: number
  y: number
  positive: boolean
}

/** Box prompts as draw-ready rectangles with score labels. */
export function boxGlyphs(boxes: TraceBox[]): BoxGlyph[] {
  return boxes.map((b) => ({
    x: b.x0,
    y: b.y0,
    width: b.x1 - b.x0,
    height: b.y1 - b.y0,
    label: `${b.phrase} ${b.score.toFixed(2)}`,
  }))
}

export function pointGlyphs(points: TracePoint[]): PointGlyph[] {
  return points.map((p) => ({ x: p.x, y: p.y, positive: p.polarity !== 0 }))
}
