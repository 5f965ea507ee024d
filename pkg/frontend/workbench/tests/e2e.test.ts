// End-to-end smoke: drive a real service process over HTTP.
// Requires the engine package (and its CLI) installed in python3.
import { ChildProcess, spawn } from 'node:child_process'
import { mkdtempSync, writeFileSync } from 'node:fs'
import { tmpdir } from 'node:os'
import { join } from 'node:path'
import { afterAll, beforeAll, describe, expect, it } from 'vitest'

import { WorkbenchClient } from '../src/client'
import { maskArea } from '../src/rle'
import { formatMetric, Session } from '../src/session'

const PORT = 8000 + Math.floor(Math.random() * 20000)
const BASE = `http://127.0.0.1:${PORT}`

const BUILD_DATASET = `
import json, sys
from pathlib import Path
import numpy as np
from PIL import Image
from text2seg.mock import generate_scene

root = Path(sys.argv[1])
scene_dir = root / "scenes"
scene_dir.mkdir(parents=True)
labels = ("building", "car", "tree")
rng = np.random.default_rng(3)
items = []
for i in range(2):
    scene = generate_scene(rng, labels=labels)
    scene.save(scene_dir / f"scene_{i:03d}.json")
    Image.fromarray(np.asarray(scene.render().pixels)).save(root / f"scene_{i:03d}.png")
    gt = np.full((scene.height, scene.width), 255, dtype=np.uint8)
    for label, mask in scene.class_masks().items():
        gt[mask.bits] = labels.index(label)
    Image.fromarray(gt).save(root / f"scene_{i:03d}_gt.png")
    items.append({"image": f"scene_{i:03d}.png", "gt": f"scene_{i:03d}_gt.png"})
(root / "manifest.json").write_text(json.dumps({
    "name": "e2e", "tile_size": 64, "ignore_index": 255,
    "classes": [{"id": i, "label": l, "synonyms": []} for i, l in enumerate(labels)],
    "items": items,
}))
`

let server: ChildProcess

async function waitForServer(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/api/manifest`)
      if (resp.ok) return
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200))
  }
  throw new Error('service did not come up')
}

beforeAll(async () => {
  const root = mkdtempSync(join(tmpdir(), 'workbench-e2e-'))
  const build = spawn('python3', ['-c', BUILD_DATASET, root], { stdio: 'inherit' })
  await new Promise<void>((resolve, reject) => {
    build.on('exit', (code) => (code === 0 ? resolve() : reject(new Error(`dataset build exited ${code}`))))
  })
  writeFileSync(
    join(root, 'service.json'),
    JSON.stringify({ manifest: 'manifest.json', backend: `mock:${join(root, 'scenes')}` })
  )
  server = spawn(
    'python3',
    ['-m', 'text2seg.cli', 'serve', '--config', join(root, 'service.json'), '--addr', `127.0.0.1:${PORT}`],
    { stdio: 'inherit' }
  )
  await waitForServer()
}, 40000)

afterAll(() => {
  server?.kill()
})

describe('workbench against a live service', () => {
  it('building/s1 yields an overlay mask with displayed IoU 1.000', async () => {
    const client = new WorkbenchClient(BASE)
    const manifest = await client.manifest()
    expect(manifest.classes.map((c) => c.label)).toContain('building')

    const session = new Session(client)
    session.selectItem(0)
    session.setLabel('building')
    session.setStrategy('s1')
    const entry = await session.submit()
    expect(entry).not.toBeNull()
    expect(maskArea(entry!.response.final_rle)).toBeGreaterThan(0)
    expect(formatMetric(entry!.response.metrics!.iou)).toBe('1.000')
  }, 30000)

  it('renders two history entries side by side for A/B comparison', async () => {
    const session = new Session(new WorkbenchClient(BASE))
    session.selectItem(0)
    session.setLabel('building')
    session.setStrategy('s1')
    await session.submit()
    session.setStrategy('s2')
    await session.submit()

    const [left, right] = session.compare(1, 2)
    expect(left.title).toBe('#1 building / s1')
    expect(right.title).toBe('#2 building / s2')
    expect(left.metricLine).toBe('IoU 1.000  OA 1.000')
    expect(right.metricLine).toBe('IoU 1.000  OA 1.000')
    // each pane carries its own full trace for overlay rendering
    expect(left.entry.response.trace.prompt.boxes.length).toBeGreaterThan(0)
    expect(right.entry.response.trace.prompt.points.length).toBeGreaterThan(0)
  }, 30000)

  it('item images are fetchable PNGs', async () => {
    const client = new WorkbenchClient(BASE)
    const resp = await fetch(client.itemImageUrl(0))
    expect(resp.headers.get('content-type')).toBe('image/png')
  })
})
