/** ViewState and its URL-fragment serialization.
 *
 * The fragment is the only client-side persistence, which makes every
 * exploration state a shareable link.
 */

export type MapName = 'lda' | 'ccp';
export type OverlayMode = 'any' | 'all';

export interface ViewState {
  map: MapName;
  filterText: string;
  overlayElements: string[]; // kept sorted and unique
  overlayMode: OverlayMode;
  selectedDoc: string | null;
}

export function defaultViewState(): ViewState {
  return {
    map: 'lda',
    filterText: '*',
    overlayElements: [],
    overlayMode: 'all',
    selectedDoc: null,
  };
}

/** Canonicalize: sorted unique elements, trimmed filter, default fallbacks.
 * The overlay mode only means something for a non-empty element set, so it
 * snaps back to the default otherwise.
 */
export function normalizeViewState(state: ViewState): ViewState {
  const elements = Array.from(new Set(state.overlayElements)).sort();
  return {
    map: state.map === 'ccp' ? 'ccp' : 'lda',
    filterText: state.filterText.trim() || '*',
    overlayElements: elements,
    overlayMode: elements.length > 0 && state.overlayMode === 'any' ? 'any' : 'all',
    selectedDoc: state.selectedDoc || null,
  };
}

export function encodeViewState(state: ViewState): string {
  const s = normalizeViewState(state);
  const params = new URLSearchParams();
  params.set('map', s.map);
  params.set('q', s.filterText);
  if (s.overlayElements.length > 0) {
    params.set('el', s.overlayElements.join(','));
    params.set('mode', s.overlayMode);
  }
  if (s.selectedDoc !== null) {
    params.set('doc', s.selectedDoc);
  }
  return '#' + params.toString();
}

export function decodeViewState(fragment: string): ViewState {
  const raw = fragment.startsWith('#') ? fragment.slice(1) : fragment;
  const params = new URLSearchParams(raw);
  const elements = (params.get('el') ?? '')
    .split(',')
    .map((e) => e.trim())
    .filter((e) => e.length > 0);
  return normalizeViewState({
    map: (params.get('map') as MapName) ?? 'lda',
    filterText: params.get('q') ?? '*',
    overlayElements: elements,
    overlayMode: (params.get('mode') as OverlayMode) ?? 'all',
    selectedDoc: params.get('doc'),
  });
}

export function viewStatesEqual(a: ViewState, b: ViewState): boolean {
  return (
    a.map === b.map &&
    a.filterText === b.filterText &&
    a.overlayMode === b.overlayMode &&
    a.selectedDoc === b.selectedDoc &&
    a.overlayElements.length === b.overlayElements.length &&
    a.overlayElements.every((e, i) => e === b.overlayElements[i])
  );
}
