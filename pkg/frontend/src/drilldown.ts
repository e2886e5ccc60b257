/** Document panel rendering as HTML strings: pure functions of their inputs,
 * so identical states produce identical markup (snapshot-testable, and safe
 * to assign to innerHTML since all dynamic content is escaped).
 */

import type { DocView } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/** Wrap case-insensitive phrase matches in <mark>, escaping everything. */
export function highlightPhrases(text: string, phrases: string[]): string {
  const needles = phrases.filter((p) => p.length > 0);
  if (needles.length === 0) {
    return escapeHtml(text);
  }
  const lower = text.toLowerCase();
  // Collect non-overlapping match ranges, earliest-first, longest-first.
  const ranges: Array<[number, number]> = [];
  for (const phrase of needles.slice().sort((a, b) => b.length - a.length)) {
    const needle = phrase.toLowerCase();
    let from = 0;
    while (true) {
      const at = lower.indexOf(needle, from);
      if (at === -1) {
        break;
      }
      const end = at + needle.length;
      if (!ranges.some(([s, e]) => at < e && end > s)) {
        ranges.push([at, end]);
      }
      from = at + 1;
    }
  }
  ranges.sort((a, b) => a[0] - b[0]);
  let out = '';
  let cursor = 0;
  for (const [start, end] of ranges) {
    out += escapeHtml(text.slice(cursor, start));
    out += `<mark>${escapeHtml(text.slice(start, end))}</mark>`;
    cursor = end;
  }
  return out + escapeHtml(text.slice(cursor));
}

export function renderDocPanel(doc: DocView, phrases: string[]): string {
  const authors = doc.authors.length > 0 ? escapeHtml(doc.authors.join(', ')) : '';
  const journal = doc.journal ? escapeHtml(doc.journal) : '';
  const meta = [authors, journal].filter((s) => s.length > 0).join(' — ');
  const chips = doc.elements
    .map((el) => `<span class="chip element">${escapeHtml(el)}</span>`)
    .join('');
  const captions = doc.captions
    .map(
      (c) =>
        `<li><span class="chip label">${escapeHtml(c.label ?? 'unlabeled')}</span> ` +
        `<span class="fig">Fig. ${c.figure}</span> ${highlightPhrases(c.text, phrases)}</li>`,
    )
    .join('');
  return [
    `<article class="doc" data-doc-id="${escapeHtml(doc.doc_id)}">`,
    `<h2>${highlightPhrases(doc.title, phrases)}</h2>`,
    meta ? `<p class="meta">${meta}</p>` : '',
    `<p class="topic">Topic: <span class="chip topic">${escapeHtml(doc.topic_name)}</span></p>`,
    chips ? `<p class="elements">${chips}</p>` : '',
    `<p class="abstract">${highlightPhrases(doc.abstract, phrases)}</p>`,
    doc.captions.length > 0 ? `<ul class="captions">${captions}</ul>` : '',
    `</article>`,
  ]
    .filter((part) => part.length > 0)
    .join('\n');
}

export function renderNotFound(docId: string): string {
  return `<article class="doc missing"><h2>Not found</h2>` +
    `<p>No document with id ${escapeHtml(docId)}.</p></article>`;
}

export function renderError(message: string): string {
  return `<div class="error">${escapeHtml(message)} <button data-action="retry">Retry</button></div>`;
}
