/**
 * Generation model contract plus the deterministic echo model.
 *
 * Echo mode exists for end-to-end contract testing: it returns the breakage
 * span from the input unchanged as the rank-1 candidate, padded with
 * deterministic filler candidates at strictly decreasing scores. This lets
 * the repair client be exercised without any trained weights.
 */

export interface Candidate {
  text: string;
  score: number;
}

export interface GenerationModel {
  generate(
    input: string,
    beamSize: number,
    maxNewTokens: number
  ): Promise<Candidate[]>;
}

const BREAKAGE_START = "[<BREAKAGE>]";
const BREAKAGE_END = "[</BREAKAGE>]";

/** Lines between the first pair of breakage markers, markers excluded. */
export function extractBreakageSpan(input: string): string {
  const lines = input.split("\n");
  const out: string[] = [];
  let inside = false;
  for (const line of lines) {
    const trimmed = line.trim();
    if (trimmed === BREAKAGE_START) {
      inside = true;
      continue;
    }
    if (trimmed === BREAKAGE_END) {
      if (inside) break;
      continue;
    }
    if (inside) out.push(line);
  }
  return out.join("\n");
}

export class EchoModel implements GenerationModel {
  async generate(
    input: string,
    beamSize: number,
    _maxNewTokens: number
  ): Promise<Candidate[]> {
    const span = extractBreakageSpan(input) || "; // no breakage span";
    const candidates: Candidate[] = [{ text: span, score: -0.01 }];
    for (let i = 1; i < beamSize; i++) {
      candidates.push({ text: `${span} echoAlt${i} ( ) ;`, score: -0.01 - 0.25 * i });
    }
    return candidates;
  }
}

/** Enforce the wire contract: exactly beamSize candidates, scores descending. */
export function normalizeCandidates(
  candidates: Candidate[],
  beamSize: number
): Candidate[] {
  const sorted = [...candidates].sort((a, b) => b.score - a.score);
  while (sorted.length < beamSize) {
    const last = sorted[sorted.length - 1] ?? { text: ";", score: 0 };
    sorted.push({ text: last.text, score: last.score - 1e-6 });
  }
  return sorted.slice(0, beamSize);
}
