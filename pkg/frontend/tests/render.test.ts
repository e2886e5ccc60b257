import { describe, expect, it } from 'vitest';

import {
  Canvas2DLike,
  RenderOptions,
  hitTest,
  labelFontSize,
  renderLabels,
  renderScatter,
  sortedLabelSizes,
} from '../src/scatter.js';
import type { MapDocument } from '../src/types.js';

/** Records every draw call and property assignment, in order. */
class RecordingContext implements Canvas2DLike {
  ops: unknown[][] = [];
  private styles: Record<string, unknown> = {};

  private record(name: string, value: unknown): void {
    this.styles[name] = value;
    this.ops.push([name, value]);
  }

  set fillStyle(v: string) { this.record('fillStyle', v); }
  get fillStyle(): string { return this.styles['fillStyle'] as string; }
  set strokeStyle(v: string) { this.record('strokeStyle', v); }
  get strokeStyle(): string { return this.styles['strokeStyle'] as string; }
  set lineWidth(v: number) { this.record('lineWidth', v); }
  get lineWidth(): number { return this.styles['lineWidth'] as number; }
  set font(v: string) { this.record('font', v); }
  get font(): string { return this.styles['font'] as string; }
  set textAlign(v: string) { this.record('textAlign', v); }
  get textAlign(): string { return this.styles['textAlign'] as string; }
  set textBaseline(v: string) { this.record('textBaseline', v); }
  get textBaseline(): string { return this.styles['textBaseline'] as string; }

  clearRect(...args: number[]): void { this.ops.push(['clearRect', ...args]); }
  beginPath(): void { this.ops.push(['beginPath']); }
  arc(...args: number[]): void { this.ops.push(['arc', ...args]); }
  fill(): void { this.ops.push(['fill']); }
  stroke(): void { this.ops.push(['stroke']); }
  fillText(text: string, x: number, y: number): void { this.ops.push(['fillText', text, x, y]); }
  strokeText(text: string, x: number, y: number): void { this.ops.push(['strokeText', text, x, y]); }
}

function demoMap(n = 40): MapDocument {
  const points = [];
  for (let i = 0; i < n; i++) {
    points.push({
      id: `item${i}`,
      x: Math.sin(i * 1.7) * 10,
      y: Math.cos(i * 2.3) * 8,
      group: i % 5 === 0 ? null : `g${i % 3}`,
    });
  }
  return {
    map_type: 'lda',
    points,
    labels: [
      { text: 'g0', x: 0, y: 0, count: 13 },
      { text: 'g1', x: 2, y: 1, count: 13 },
      { text: 'g2', x: -3, y: 2, count: 6 },
    ],
    provenance: {},
  };
}

function options(overrides: Partial<RenderOptions> = {}): RenderOptions {
  return {
    width: 800,
    height: 600,
    camera: { scale: 1, offsetX: 0, offsetY: 0 },
    overlay: new Set(),
    highlight: new Set(),
    selected: null,
    ...overrides,
  };
}

describe('renderScatter', () => {
  it('draws exactly one point per map point', () => {
    const ctx = new RecordingContext();
    const map = demoMap();
    const result = renderScatter(ctx, map, options());
    expect(result.drawnPoints).toBe(map.points.length);
    const fills = ctx.ops.filter(([op]) => op === 'fill');
    expect(fills.length).toBe(map.points.length);
  });

  it('is deterministic: identical state produces identical draw sequences', () => {
    const map = demoMap();
    const opts = options({ overlay: new Set(['item3', 'item7']), selected: 'item5' });
    const a = new RecordingContext();
    const b = new RecordingContext();
    renderScatter(a, map, opts);
    renderLabels(a, map, opts);
    renderScatter(b, map, opts);
    renderLabels(b, map, opts);
    expect(a.ops).toEqual(b.ops);
  });

  it('re-colors exactly the overlay ids', () => {
    const ctx = new RecordingContext();
    const map = demoMap();
    const overlay = new Set(['item1', 'item2', 'item9', 'not-a-point']);
    const result = renderScatter(ctx, map, options({ overlay }));
    const overlayFills = ctx.ops.filter(([op, v]) => op === 'fillStyle' && v === '#ff2d2d');
    expect(result.overlayDrawn).toBe(3); // the id that is not a point draws nothing
    expect(overlayFills.length).toBe(3);
  });

  it('rings exactly the highlighted ids', () => {
    const ctx = new RecordingContext();
    const map = demoMap();
    const highlight = new Set(['item0', 'item4', 'item11', 'ghost']);
    renderScatter(ctx, map, options({ highlight }));
    const strokes = ctx.ops.filter(([op]) => op === 'stroke');
    expect(strokes.length).toBe(3);
  });

  it('changing the camera changes the drawn coordinates', () => {
    const map = demoMap();
    const a = new RecordingContext();
    const b = new RecordingContext();
    renderScatter(a, map, options());
    renderScatter(b, map, options({ camera: { scale: 2, offsetX: 30, offsetY: -10 } }));
    expect(a.ops).not.toEqual(b.ops);
  });
});

describe('renderLabels', () => {
  it('draws every placed label with monotone font sizes', () => {
    const ctx = new RecordingContext();
    const map = demoMap();
    renderLabels(ctx, map, options());
    const texts = ctx.ops.filter(([op]) => op === 'fillText').map(([, text]) => text);
    expect(texts).toEqual(['g0', 'g1', 'g2']);
    const sizes = sortedLabelSizes(map.labels);
    for (let i = 1; i < sizes.length; i++) {
      expect(sizes[i]).toBeGreaterThanOrEqual(sizes[i - 1]);
    }
    expect(labelFontSize(100)).toBeGreaterThan(labelFontSize(1));
    expect(labelFontSize(13)).toBe(labelFontSize(13)); // equal counts, equal size
  });
});

describe('hitTest', () => {
  it('finds the point under the cursor and misses empty space', () => {
    const map = demoMap();
    const opts = options();
    // Project a known point and query at its screen position.
    const ctx = new RecordingContext();
    renderScatter(ctx, map, opts);
    const firstArc = ctx.ops.find(([op]) => op === 'arc') as number[];
    const [, sx, sy] = firstArc.slice(0) as unknown as [string, number, number];
    const hit = hitTest(map, opts, Number(sx), Number(sy));
    expect(hit?.id).toBe('item0');
    expect(hitTest(map, opts, -500, -500)).toBeNull();
  });
});
