// Small presentation helpers; formulas and diagnosis strings arrive already
// rendered by the service and are shown verbatim (escaped for HTML only).

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function questionText(sentence: string): string {
  return `Does the intended system satisfy: ${sentence}?`;
}

export function outcomeLabel(outcome: boolean | null): string {
  if (outcome === null) return "";
  return outcome ? "yes, this should hold" : "no, this must not hold";
}

export function answerKeyFor(sessionId: string, iteration: number): string {
  // one key per question: repeated clicks replay instead of re-applying
  return `answer-${sessionId}-${iteration}`;
}
