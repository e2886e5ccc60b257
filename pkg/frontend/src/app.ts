/** Explorer application wiring: DOM setup, event handling, state flow.
 *
 * All analytics stay on the server; this module only moves state between the
 * URL fragment, the controls, the API client, and the renderers.
 */

import { ApiClient, ApiError, LatestWins } from './api.js';
import { renderDocPanel, renderError, renderNotFound } from './drilldown.js';
import { composeFilter, extractPhrases } from './filter.js';
import {
  Camera,
  RenderOptions,
  hitTest,
  renderLabels,
  renderScatter,
} from './scatter.js';
import {
  ViewState,
  decodeViewState,
  defaultViewState,
  encodeViewState,
  normalizeViewState,
  viewStatesEqual,
} from './state.js';
import type { MapDocument, QueryResponse } from './types.js';

/** The point set a query response highlights on the active map. */
export function selectHighlightIds(state: ViewState, response: QueryResponse): Set<string> {
  return new Set(state.map === 'lda' ? response.doc_ids : response.caption_ids);
}

export function docIdOfPoint(state: ViewState, pointId: string): string {
  return state.map === 'lda' ? pointId : pointId.split('::')[0];
}

interface Panels {
  canvas: HTMLCanvasElement;
  labelCanvas: HTMLCanvasElement;
  status: HTMLElement;
  results: HTMLElement;
  docPanel: HTMLElement;
  filterInput: HTMLInputElement;
  filterError: HTMLElement;
  topicPicker: HTMLSelectElement;
  labelPicker: HTMLSelectElement;
  elementInput: HTMLInputElement;
  elementMode: HTMLSelectElement;
  phraseInput: HTMLInputElement;
  mapToggle: HTMLSelectElement;
  overlayInput: HTMLInputElement;
  overlayMode: HTMLSelectElement;
  hover: HTMLElement;
}

export class ExplorerApp {
  private state: ViewState = defaultViewState();
  private maps: Partial<Record<'lda' | 'ccp', MapDocument>> = {};
  private overlayIds: Set<string> = new Set();
  private highlightIds: Set<string> = new Set();
  private camera: Camera = { scale: 1, offsetX: 0, offsetY: 0 };
  private queryGate = new LatestWins();
  private overlayGate = new LatestWins();
  private suppressHashHandler = false;

  constructor(
    private api: ApiClient,
    private panels: Panels,
    private win: Window = window,
  ) {}

  async start(): Promise<void> {
    try {
      const [lda, ccp, topics, labels] = await Promise.all([
        this.api.getMap('lda'),
        this.api.getMap('ccp'),
        this.api.getTopics(),
        this.api.getLabels(),
      ]);
      this.maps = { lda, ccp };
      this.fillPicker(this.panels.topicPicker, topics.map((t) => t.name));
      this.fillPicker(this.panels.labelPicker, labels.rules.map((r) => r.label));
    } catch (err) {
      this.panels.status.innerHTML = renderError(`Failed to load artifacts: ${String(err)}`);
      this.panels.status.querySelector('[data-action=retry]')?.addEventListener('click', () => {
        this.panels.status.textContent = '';
        void this.start();
      });
      return;
    }
    this.bindEvents();
    this.applyState(decodeViewState(this.win.location.hash), { pushHash: false });
  }

  private fillPicker(select: HTMLSelectElement, names: string[]): void {
    select.innerHTML = '<option value="">(any)</option>';
    for (const name of names) {
      const option = this.win.document.createElement('option');
      option.value = name;
      option.textContent = name;
      select.appendChild(option);
    }
  }

  private bindEvents(): void {
    const p = this.panels;
    p.mapToggle.addEventListener('change', () => {
      this.applyState({ ...this.state, map: p.mapToggle.value === 'ccp' ? 'ccp' : 'lda' });
    });
    p.filterInput.addEventListener('change', () => {
      this.applyState({ ...this.state, filterText: p.filterInput.value });
    });
    const compose = () => {
      const expr = composeFilter({
        topic: p.topicPicker.value || null,
        elements: p.elementInput.value.split(',').map((e) => e.trim()).filter(Boolean),
        elementMode: p.elementMode.value === 'OR' ? 'OR' : 'AND',
        phrase: p.phraseInput.value,
        captionLabel: p.labelPicker.value || null,
      });
      this.applyState({ ...this.state, filterText: expr });
    };
    for (const control of [p.topicPicker, p.labelPicker, p.elementInput, p.elementMode, p.phraseInput]) {
      control.addEventListener('change', compose);
    }
    p.overlayInput.addEventListener('change', () => {
      const elements = p.overlayInput.value.split(',').map((e) => e.trim()).filter(Boolean);
      this.applyState({ ...this.state, overlayElements: elements });
    });
    p.overlayMode.addEventListener('change', () => {
      this.applyState({
        ...this.state,
        overlayMode: p.overlayMode.value === 'any' ? 'any' : 'all',
      });
    });
    this.win.addEventListener('hashchange', () => {
      if (this.suppressHashHandler) {
        return;
      }
      const incoming = decodeViewState(this.win.location.hash);
      if (!viewStatesEqual(incoming, this.state)) {
        this.applyState(incoming, { pushHash: false });
      }
    });
    this.bindCanvas();
  }

  private bindCanvas(): void {
    const canvas = this.panels.labelCanvas; // top layer receives events
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    canvas.addEventListener('mousedown', (ev) => {
      dragging = true;
      lastX = ev.offsetX;
      lastY = ev.offsetY;
    });
    canvas.addEventListener('mouseup', (ev) => {
      dragging = false;
      const moved = Math.abs(ev.offsetX - lastX) + Math.abs(ev.offsetY - lastY);
      if (moved < 3) {
        const hit = hitTest(this.activeMap(), this.renderOptions(), ev.offsetX, ev.offsetY);
        if (hit) {
          this.applyState({ ...this.state, selectedDoc: docIdOfPoint(this.state, hit.id) });
        }
      }
    });
    canvas.addEventListener('mousemove', (ev) => {
      if (dragging) {
        this.camera.offsetX += ev.offsetX - lastX;
        this.camera.offsetY += ev.offsetY - lastY;
        lastX = ev.offsetX;
        lastY = ev.offsetY;
        this.draw();
        return;
      }
      const hit = hitTest(this.activeMap(), this.renderOptions(), ev.offsetX, ev.offsetY);
      this.panels.hover.textContent = hit ? `${hit.id} — ${hit.group ?? 'unlabeled'}` : '';
    });
    canvas.addEventListener('wheel', (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.15 : 1 / 1.15;
      // Zoom about the cursor position.
      this.camera.offsetX = ev.offsetX - (ev.offsetX - this.camera.offsetX) * factor;
      this.camera.offsetY = ev.offsetY - (ev.offsetY - this.camera.offsetY) * factor;
      this.camera.scale *= factor;
      this.draw();
    });
  }

  private activeMap(): MapDocument {
    const map = this.maps[this.state.map];
    if (!map) {
      throw new Error(`map ${this.state.map} not loaded`);
    }
    return map;
  }

  private renderOptions(): RenderOptions {
    return {
      width: this.panels.canvas.width,
      height: this.panels.canvas.height,
      camera: this.camera,
      overlay: this.overlayIds,
      highlight: this.highlightIds,
      selected: this.state.selectedDoc,
    };
  }

  applyState(next: ViewState, opts: { pushHash?: boolean } = {}): void {
    const normalized = normalizeViewState(next);
    const mapChanged = normalized.map !== this.state.map;
    const filterChanged = normalized.filterText !== this.state.filterText;
    const overlayChanged =
      normalized.overlayElements.join(',') !== this.state.overlayElements.join(',') ||
      normalized.overlayMode !== this.state.overlayMode;
    const docChanged = normalized.selectedDoc !== this.state.selectedDoc;
    this.state = normalized;

    if (opts.pushHash !== false) {
      this.suppressHashHandler = true;
      this.win.location.hash = encodeViewState(this.state);
      this.suppressHashHandler = false;
    }
    this.syncControls();

    if (mapChanged || filterChanged) {
      void this.refreshQuery();
    }
    if (mapChanged || overlayChanged) {
      void this.refreshOverlay();
    }
    if (docChanged) {
      void this.refreshDocPanel();
    }
    this.draw();
  }

  private syncControls(): void {
    const p = this.panels;
    p.mapToggle.value = this.state.map;
    p.filterInput.value = this.state.filterText;
    p.overlayInput.value = this.state.overlayElements.join(',');
    p.overlayMode.value = this.state.overlayMode;
  }

  private async refreshQuery(): Promise<void> {
    this.panels.filterError.textContent = '';
    const expr = this.state.filterText;
    try {
      const response = await this.queryGate.run((signal) => this.api.query(expr, signal));
      if (response === null) {
        return; // superseded by a newer query
      }
      this.highlightIds = selectHighlightIds(this.state, response);
      this.renderResults(response);
    } catch (err) {
      if (err instanceof ApiError) {
        const where = err.position !== undefined ? ` (position ${err.position})` : '';
        this.panels.filterError.textContent = `${err.message}${where}`;
        this.highlightIds = new Set();
        this.panels.results.textContent = '';
      } else {
        this.panels.status.innerHTML = renderError(String(err));
      }
    }
    this.draw();
  }

  private async refreshOverlay(): Promise<void> {
    if (this.state.overlayElements.length === 0) {
      this.overlayIds = new Set();
      this.draw();
      return;
    }
    try {
      const response = await this.overlayGate.run((signal) =>
        this.api.getOverlay(this.state.overlayElements, this.state.map, this.state.overlayMode, signal),
      );
      if (response === null) {
        return;
      }
      this.overlayIds = new Set(response.item_ids);
    } catch (err) {
      this.panels.status.innerHTML = renderError(String(err));
      this.overlayIds = new Set();
    }
    this.draw();
  }

  private renderResults(response: QueryResponse): void {
    const items = this.state.map === 'lda' ? response.doc_ids : response.caption_ids;
    const list = items
      .slice(0, 200)
      .map((id) => `<li data-id="${id}">${id}</li>`)
      .join('');
    this.panels.results.innerHTML =
      `<p>${response.doc_ids.length} documents, ${response.caption_ids.length} captions</p>` +
      `<ul>${list}</ul>`;
    for (const li of Array.from(this.panels.results.querySelectorAll('li'))) {
      li.addEventListener('click', () => {
        const id = li.getAttribute('data-id')!;
        this.applyState({ ...this.state, selectedDoc: docIdOfPoint(this.state, id) });
      });
    }
  }

  private async refreshDocPanel(): Promise<void> {
    const docId = this.state.selectedDoc;
    if (docId === null) {
      this.panels.docPanel.innerHTML = '';
      return;
    }
    try {
      const doc = await this.api.getDoc(docId);
      this.panels.docPanel.innerHTML = renderDocPanel(doc, extractPhrases(this.state.filterText));
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.panels.docPanel.innerHTML = renderNotFound(docId);
      } else {
        this.panels.docPanel.innerHTML = renderError(String(err));
      }
    }
  }

  draw(): void {
    const map = this.maps[this.state.map];
    if (!map) {
      return;
    }
    const opts = this.renderOptions();
    const base = this.panels.canvas.getContext('2d');
    const top = this.panels.labelCanvas.getContext('2d');
    if (base) {
      renderScatter(base as never, map, opts);
    }
    if (top) {
      top.clearRect(0, 0, opts.width, opts.height);
      renderLabels(top as never, map, opts);
    }
    this.panels.status.textContent =
      `${map.points.length} points — ${this.state.map} map — ` +
      `${this.highlightIds.size} matched, ${this.overlayIds.size} in overlay`;
  }
}
