/**
 * Punctuation-splitting tokenizer mirroring the repair pipeline's canonical
 * text encoding: identifier/number runs stay whole, every other non-space
 * character is its own token, and special markers count as one token.
 */

const WORD_OR_PUNCT = /[A-Za-z0-9_$]+|[^\sA-Za-z0-9_$]/g;

export const SPECIAL_TOKENS = [
  "[<TESTCONTEXT>]",
  "[<REPAIRCONTEXT>]",
  "[<BREAKAGE>]",
  "[</BREAKAGE>]",
  "[<HUNK>]",
  "[</HUNK>]",
  "[<DEL>]",
  "[</DEL>]",
  "[<ADD>]",
  "[</ADD>]",
  "[<replaceOld>]",
  "[<replaceNew>]",
  "[<replaceOldKeepBefore>]",
  "[<replaceNewKeepBefore>]",
  "[<replaceOldKeepAfter>]",
  "[<replaceNewKeepAfter>]",
  "[<replaceEnd>]",
];

const SPECIAL_SET = new Set(SPECIAL_TOKENS);

export function tokenize(text: string): string[] {
  return text.match(WORD_OR_PUNCT) ?? [];
}

/** Token count of canonical rendered text; special markers count as 1. */
export function countTokens(text: string): number {
  let total = 0;
  for (const piece of text.split(/\s+/)) {
    if (!piece) continue;
    total += SPECIAL_SET.has(piece) ? 1 : tokenize(piece).length;
  }
  return total;
}

/**
 * Model-facing token stream of an input: whitespace-separated pieces with
 * special markers kept atomic and code pieces split like the tokenizer does.
 */
export function inputTokens(text: string): string[] {
  const out: string[] = [];
  for (const piece of text.split(/\s+/)) {
    if (!piece) continue;
    if (SPECIAL_SET.has(piece)) {
      out.push(piece);
    } else {
      out.push(...tokenize(piece));
    }
  }
  return out;
}
