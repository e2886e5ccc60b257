import { ApiClient } from './api.js';
import { ExplorerApp } from './app.js';

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

const app = new ExplorerApp(new ApiClient(''), {
  canvas: byId<HTMLCanvasElement>('points'),
  labelCanvas: byId<HTMLCanvasElement>('labels'),
  status: byId('status'),
  results: byId('results'),
  docPanel: byId('doc-panel'),
  filterInput: byId<HTMLInputElement>('filter-input'),
  filterError: byId('filter-error'),
  topicPicker: byId<HTMLSelectElement>('topic-picker'),
  labelPicker: byId<HTMLSelectElement>('label-picker'),
  elementInput: byId<HTMLInputElement>('element-input'),
  elementMode: byId<HTMLSelectElement>('element-mode'),
  phraseInput: byId<HTMLInputElement>('phrase-input'),
  mapToggle: byId<HTMLSelectElement>('map-toggle'),
  overlayInput: byId<HTMLInputElement>('overlay-input'),
  overlayMode: byId<HTMLSelectElement>('overlay-mode'),
  hover: byId('hover'),
});

void app.start();
