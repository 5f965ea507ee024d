/** Session state: prompt editing, run history, A/B comparison.
 *
 * The session never computes masks itself — every result comes from
 * /api/segment, and history entries are frozen snapshots of exactly
 * what was sent and received.
 */

import { SegmentRequest, SegmentResponse, ServiceError, WorkbenchClient } from './client'

export const MAX_SYNONYMS = 10

export type OverlayLayer = 'boxes' | 'points' | 'heatmap' | 'mask' | 'gt'

export interface HistoryEntry {
  readonly id: number
  readonly request: SegmentRequest
  readonly response: SegmentResponse
}

export interface ComparisonPane {
  entry: HistoryEntry
  title: string
  metricLine: string | null
}

export interface SessionView {
  item: number | null
  label: string
  synonyms: string[]
  strategy: string
  layers: Record<OverlayLayer, boolean>
  history: readonly HistoryEntry[]
  lastError: string | null
  busy: boolean
}

/** Render a metric the way the UI shows it: three decimals. */
export function formatMetric(value: number): string {
  return value.toFixed(3)
}

export class Session {
  private item: number | null = null
  private label = ''
  private synonyms: string[] = []
  private strategy = 's1'
  private params: SegmentRequest['params'] = undefined
  private layers: Record<OverlayLayer, boolean> = {
    boxes: true,
    points: true,
    heatmap: false,
    mask: true,
    gt: false,
  }
  private history: HistoryEntry[] = []
  private nextId = 1
  private inFlight: AbortController | null = null
  private lastError: string | null = null

  constructor(private readonly client: WorkbenchClient) {}

  selectItem(item: number | null): void {
    this.item = item
  }

  setLabel(label: string): void {
    this.label = label
  }

  setSynonyms(synonyms: string[]): void {
    if (synonyms.length > MAX_SYNONYMS) {
      throw new Error(`at most ${MAX_SYNONYMS} synonyms`)
    }
    this.synonyms = [...synonyms]
  }

  setStrategy(strategy: string): void {
    this.strategy = strategy
  }

  setParams(params: SegmentRequest['params']): void {
    this.params = params
  }

  /** Layer toggles are pure view state; no request is issued. */
  toggleLayer(layer: OverlayLayer): void {
    this.layers[layer] = !this.layers[layer]
  }

  canSubmit(): boolean {
    return this.label.trim().length > 0 && this.item !== null
  }

  view(): SessionView {
    return {
      item: this.item,
      label: this.label,
      synonyms: [...this.synonyms],
      strategy: this.strategy,
      layers: { ...this.layers },
      history: this.history,
      lastError: this.lastError,
      busy: this.inFlight !== null,
    }
  }

  /** Submit the current prompt; a newer submission cancels this one. */
  async submit(): Promise<HistoryEntry | null> {
    if (!this.canSubmit()) throw new Error('label and item are required')
    this.inFlight?.abort()
    const controller = new AbortController()
    this.inFlight = controller

    const request: SegmentRequest = {
      item: this.item!,
      class_label: this.label,
      strategy: this.strategy,
      ...(this.synonyms.length ? { synonyms: [...this.synonyms] } : {}),
      ...(this.params ? { params: { ...this.params } } : {}),
    }
    try {
      const response = await this.client.segment(request, controller.signal)
      if (controller.signal.aborted) return null
      const entry: HistoryEntry = Object.freeze({
        id: this.nextId++,
        request: Object.freeze(request),
        response,
      })
      this.history = [...this.history, entry]
      this.lastError = null
      return entry
    } catch (err) {
      if (controller.signal.aborted) return null
      // surface the error inline; prompt state stays editable
      this.lastError = err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err)
      return null
    } finally {
      if (this.inFlight === controller) this.inFlight = null
    }
  }

  private pane(entry: HistoryEntry): ComparisonPane {
    const m = entry.response.metrics
    return {
      entry,
      title: `#${entry.id} ${entry.request.class_label} / ${entry.request.strategy}`,
      metricLine: m ? `IoU ${formatMetric(m.iou)}  OA ${formatMetric(m.oa)}` : null,
    }
  }

  /** Side-by-side view of two history entries (the A/B workflow). */
  compare(aId: number, bId: number): [ComparisonPane, ComparisonPane] {
    const byId = new Map(this.history.map((e) => [e.id, e]))
    const a = byId.get(aId)
    const b = byId.get(bId)
    if (!a || !b) throw new Error('unknown history entry')
    return [this.pane(a), this.pane(b)]
  }
}
