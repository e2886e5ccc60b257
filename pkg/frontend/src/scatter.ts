/** Canvas scatter rendering: base points colored by group, overlay ids
 * re-colored, query hits ringed, placed labels in a separate layer with font
 * size monotone in count. Pure in its inputs so identical view states yield
 * identical draw sequences.
 */

import type { MapDocument, MapPoint, PlacedLabel } from './types.js';

/** The subset of CanvasRenderingContext2D the renderer touches; a recording
 * stub implements it in tests. */
export interface Canvas2DLike {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  font: string;
  textAlign: string;
  textBaseline: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
  strokeText(text: string, x: number, y: number): void;
}

export interface Camera {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export interface RenderOptions {
  width: number;
  height: number;
  camera: Camera;
  overlay: ReadonlySet<string>;
  highlight: ReadonlySet<string>;
  selected: string | null;
}

// Okabe-Ito palette (colorblind-safe; not canonical, there is no published
// reference palette for these maps).
const GROUP_COLORS = [
  '#0072b2', '#e69f00', '#009e73', '#cc79a7', '#56b4e9',
  '#d55e00', '#f0e442', '#999999',
];
const UNGROUPED_COLOR = '#d0d0d0';
const OVERLAY_COLOR = '#ff2d2d';
const HIGHLIGHT_RING = '#111111';

export function groupColor(group: string | null, groupOrder: string[]): string {
  if (group === null) {
    return UNGROUPED_COLOR;
  }
  const index = groupOrder.indexOf(group);
  if (index >= 0) {
    return GROUP_COLORS[index % GROUP_COLORS.length];
  }
  let hash = 0;
  for (let i = 0; i < group.length; i++) {
    hash = (hash * 31 + group.charCodeAt(i)) >>> 0;
  }
  return GROUP_COLORS[hash % GROUP_COLORS.length];
}

export function groupOrderOf(map: MapDocument): string[] {
  const seen: string[] = [];
  for (const p of map.points) {
    if (p.group !== null && !seen.includes(p.group)) {
      seen.push(p.group);
    }
  }
  return seen;
}

export interface Projection {
  toScreen(x: number, y: number): [number, number];
}

/** World-to-screen projection: fit the point bounding box, then apply the
 * camera pan/zoom on top. */
export function makeProjection(map: MapDocument, opts: RenderOptions): Projection {
  const xs = map.points.map((p) => p.x);
  const ys = map.points.map((p) => p.y);
  const minX = Math.min(...xs, 0);
  const maxX = Math.max(...xs, 1);
  const minY = Math.min(...ys, 0);
  const maxY = Math.max(...ys, 1);
  const margin = 24;
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const fit = Math.min((opts.width - 2 * margin) / spanX, (opts.height - 2 * margin) / spanY);
  const { scale, offsetX, offsetY } = opts.camera;
  return {
    toScreen(x: number, y: number): [number, number] {
      const sx = margin + (x - minX) * fit;
      const sy = opts.height - margin - (y - minY) * fit; // y grows upward
      return [sx * scale + offsetX, sy * scale + offsetY];
    },
  };
}

export function labelFontSize(count: number): number {
  // Monotone in count, clamped for readability.
  return Math.min(26, 10 + 4 * Math.log10(count + 1));
}

export interface RenderResult {
  drawnPoints: number;
  overlayDrawn: number;
}

export function renderScatter(
  ctx: Canvas2DLike,
  map: MapDocument,
  opts: RenderOptions,
): RenderResult {
  const projection = makeProjection(map, opts);
  const order = groupOrderOf(map);
  ctx.clearRect(0, 0, opts.width, opts.height);

  let drawn = 0;
  let overlayDrawn = 0;
  for (const p of map.points) {
    const [sx, sy] = projection.toScreen(p.x, p.y);
    const inOverlay = opts.overlay.has(p.id);
    const radius = inOverlay ? 4 : 2.5;
    ctx.fillStyle = inOverlay ? OVERLAY_COLOR : groupColor(p.group, order);
    ctx.beginPath();
    ctx.arc(sx, sy, radius, 0, Math.PI * 2);
    ctx.fill();
    if (opts.highlight.has(p.id)) {
      ctx.strokeStyle = HIGHLIGHT_RING;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(sx, sy, radius + 2, 0, Math.PI * 2);
      ctx.stroke();
    }
    if (opts.selected === p.id) {
      ctx.strokeStyle = OVERLAY_COLOR;
      ctx.lineWidth = 2.5;
      ctx.beginPath();
      ctx.arc(sx, sy, radius + 4, 0, Math.PI * 2);
      ctx.stroke();
    }
    drawn += 1;
    if (inOverlay) {
      overlayDrawn += 1;
    }
  }
  return { drawnPoints: drawn, overlayDrawn };
}

/** The label layer is drawn separately so it always sits above the points. */
export function renderLabels(ctx: Canvas2DLike, map: MapDocument, opts: RenderOptions): void {
  const projection = makeProjection(map, opts);
  ctx.textAlign = 'center';
  ctx.textBaseline = 'middle';
  for (const label of map.labels) {
    const [sx, sy] = projection.toScreen(label.x, label.y);
    ctx.font = `${labelFontSize(label.count).toFixed(1)}px sans-serif`;
    ctx.strokeStyle = '#ffffff';
    ctx.lineWidth = 3;
    ctx.strokeText(label.text, sx, sy);
    ctx.fillStyle = '#222222';
    ctx.fillText(label.text, sx, sy);
  }
}

/** Nearest point within `radius` screen pixels, for hover and selection. */
export function hitTest(
  map: MapDocument,
  opts: RenderOptions,
  px: number,
  py: number,
  radius: number = 6,
): MapPoint | null {
  const projection = makeProjection(map, opts);
  let best: MapPoint | null = null;
  let bestDist = radius * radius;
  for (const p of map.points) {
    const [sx, sy] = projection.toScreen(p.x, p.y);
    const d2 = (sx - px) * (sx - px) + (sy - py) * (sy - py);
    if (d2 <= bestDist) {
      best = p;
      bestDist = d2;
    }
  }
  return best;
}

export function sortedLabelSizes(labels: PlacedLabel[]): number[] {
  return labels
    .slice()
    .sort((a, b) => a.count - b.count)
    .map((l) => labelFontSize(l.count));
}
