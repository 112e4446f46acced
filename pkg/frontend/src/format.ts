/** Display helpers for the decimal strings the service emits.
 *
 * Risk values arrive as full-precision decimal strings and must survive
 * to the page verbatim; anything shown rounded is derived for display
 * only and never replaces the original.
 */

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** "0.028201628565166031" -> "2.82%"; keeps sign for differences. */
export function asPercent(risk: string): string {
  const x = Number(risk) * 100;
  if (!Number.isFinite(x)) return risk;
  const rounded = x.toPrecision(3);
  // toPrecision flips to exponent notation for tiny values; keep those
  const display = Math.abs(x) >= 0.01 || x === 0 ? trimZeros(rounded) : rounded;
  return `${display}%`;
}

function trimZeros(s: string): string {
  if (!s.includes(".")) return s;
  return s.replace(/0+$/, "").replace(/\.$/, "");
}

/** Horizon label for a tau column. */
export function tauLabel(tau: number | string): string {
  return `${tau}-year`;
}

export function signOf(risk: string): "up" | "down" | "flat" {
  const x = Number(risk);
  if (x > 0) return "up";
  if (x < 0) return "down";
  return "flat";
}
