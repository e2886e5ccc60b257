/** Payload shapes of the read-only HTTP API. */

export interface MapPoint {
  id: string;
  x: number;
  y: number;
  group: string | null;
}

export interface PlacedLabel {
  text: string;
  x: number;
  y: number;
  count: number;
}

export interface MapDocument {
  map_type: 'lda' | 'ccp';
  points: MapPoint[];
  labels: PlacedLabel[];
  provenance: Record<string, string>;
}

export interface QueryResponse {
  doc_ids: string[];
  caption_ids: string[];
}

export interface OverlayResponse {
  map: string;
  mode: string;
  elements: string[];
  item_ids: string[];
}

export interface StatsResponse {
  documents: number;
  captions: number;
  topics: number;
  labeled_captions: number;
  elements_marked: number;
}

export interface TopicWord {
  term: string;
  p: number;
}

export interface TopicInfo {
  topic: number;
  name: string;
  words: TopicWord[];
}

export interface RuleInfo {
  label: string;
  priority: number;
  patterns: string[];
}

export interface LabelsResponse {
  rules: RuleInfo[];
  counts: Record<string, number>;
}

export interface CaptionView {
  figure: number;
  text: string;
  label: string | null;
}

export interface DocView {
  doc_id: string;
  title: string;
  abstract: string;
  journal: string | null;
  authors: string[];
  captions: CaptionView[];
  relevant: boolean | null;
  topic: number;
  topic_name: string;
  elements: string[];
}

export interface ApiErrorBody {
  error: string;
  position?: number;
}
