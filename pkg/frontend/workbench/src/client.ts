/** Typed client for the workbench service (/api/*). */

import { RleMask } from './rle'

export interface ClassInfo {
  id: number
  label: string
  synonyms: string[]
}

export interface ManifestInfo {
  name: string
  tile_size: number
  ignore_index: number
  classes: ClassInfo[]
  items: { id: number; image: string; has_gt: boolean }[]
}

export interface StrategyInfo {
  id: string
  description: string
  requires: string[]
}

export interface SegmentParams {
  box_threshold?: number
  text_threshold?: number
  point_threshold?: number
  max_points?: number
  grid_n?: number
  background_phrases?: string[]
  s5_fresh_gallery?: boolean
}

export interface SegmentRequest {
  item?: number
  image_png_b64?: string
  class_label: string
  synonyms?: string[]
  strategy: string
  params?: SegmentParams
}

export interface TraceBox {
  x0: number
  y0: number
  x1: number
  y1: number
  score: number
  phrase: string
}

export interface TracePoint {
  x: number
  y: number
  polarity: number
}

export interface SimilarityMapJson {
  phrase: string
  w: number
  h: number
  values_f32_b64: string
}

export interface GalleryEntry {
  rle: RleMask
  confidence: number
  selected: boolean
  score: number | null
  note: string | null
}

export interface Trace {
  strategy: string
  class: { id: number; label: string; synonyms: string[] }
  prompt: { boxes: TraceBox[]; points: TracePoint[] }
  similarity_maps: SimilarityMapJson[]
  gallery: GalleryEntry[]
  final_rle: RleMask
}

export interface SegmentResponse {
  final_rle: RleMask
  trace: Trace
  metrics?: { iou: number; oa: number }
}

export class ServiceError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number
  ) {
    super(message)
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>

export class WorkbenchClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args)
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path)
    return this.unwrap<T>(resp)
  }

  private async unwrap<T>(resp: Response): Promise<T> {
    const body = await resp.json()
    if (!resp.ok) {
      const err = body?.error ?? { code: 'model_error', message: 'unknown error' }
      throw new ServiceError(err.code, err.message, resp.status)
    }
    return body as T
  }

  manifest(): Promise<ManifestInfo> {
    return this.get('/api/manifest')
  }

  async strategies(): Promise<StrategyInfo[]> {
    const body = await this.get<{ strategies: StrategyInfo[] }>('/api/strategies')
    return body.strategies
  }

  itemImageUrl(itemId: number): string {
    return `${this.baseUrl}/api/items/${itemId}/image`
  }

  async segment(req: SegmentRequest, signal?: AbortSignal): Promise<SegmentResponse> {
    const resp = await this.fetchImpl(this.baseUrl + '/api/segment', {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(req),
      signal,
    })
    return this.unwrap<SegmentResponse>(resp)
  }
}
