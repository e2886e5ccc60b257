/** Filter expression composition from builder-panel selections.
 *
 * Output is grammar-valid by construction: names are restricted to the
 * grammar's name charset, phrases are quoted with inner quotes stripped, and
 * OR-joined element groups are parenthesized when combined with other
 * clauses.
 */

export interface FilterSelections {
  topic?: string | null;
  elements?: string[];
  elementMode?: 'AND' | 'OR';
  phrase?: string;
  captionLabel?: string | null;
  baseExpr?: string | null;
}

const NAME_CHARS = /[^A-Za-z0-9_+\-.]/g;

export function sanitizeName(name: string): string {
  return name.trim().replace(/\s+/g, '-').replace(NAME_CHARS, '');
}

export function sanitizePhrase(phrase: string): string {
  return phrase.replace(/"/g, '').trim();
}

export function composeFilter(sel: FilterSelections): string {
  const clauses: string[] = [];

  const base = sel.baseExpr?.trim();
  if (base && base !== '*') {
    clauses.push(`( ${base} )`);
  }

  const topic = sel.topic ? sanitizeName(sel.topic) : '';
  if (topic) {
    clauses.push(`topic:${topic}`);
  }

  const elements = (sel.elements ?? []).map(sanitizeName).filter((e) => e.length > 0);
  if (elements.length === 1) {
    clauses.push(`element:${elements[0]}`);
  } else if (elements.length > 1) {
    const joiner = sel.elementMode === 'OR' ? ' OR ' : ' AND ';
    const joined = elements.map((e) => `element:${e}`).join(joiner);
    if (sel.elementMode === 'OR') {
      clauses.push(`( ${joined} )`);
    } else {
      clauses.push(joined);
    }
  }

  const phrase = sel.phrase ? sanitizePhrase(sel.phrase) : '';
  if (phrase) {
    clauses.push(`phrase:"${phrase}"`);
  }

  const label = sel.captionLabel ? sanitizeName(sel.captionLabel) : '';
  if (label) {
    clauses.push(`caption:${label}`);
  }

  return clauses.length === 0 ? '*' : clauses.join(' AND ');
}

/** Extract the phrase terms of an expression, for drill-down highlighting. */
export function extractPhrases(expr: string): string[] {
  const out: string[] = [];
  const re = /phrase:"([^"]*)"/g;
  let match: RegExpExecArray | null;
  while ((match = re.exec(expr)) !== null) {
    if (match[1].length > 0) {
      out.push(match[1]);
    }
  }
  return out;
}
