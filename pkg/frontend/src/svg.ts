/** Small deterministic SVG builders (fixed sizes, fixed styles, no
 * timestamps) so identical inputs always produce identical bytes. */

export const WIDTH = 640;
export const HEIGHT = 400;
export const MARGIN = { top: 20, right: 20, bottom: 45, left: 55 };

/** Fixed series palette, assigned by input order. */
export const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd"];

export function fmt(x: number): string {
  // fixed-notation, trimmed trailing zeros: stable across platforms
  const s = x.toFixed(4).replace(/\.?0+$/, "");
  return s === "-0" ? "0" : s;
}

export function openSvg(width = WIDTH, height = HEIGHT): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
    `height="${height}" viewBox="0 0 ${width} ${height}" ` +
    `font-family="sans-serif" font-size="12">\n` +
    `<rect width="${width}" height="${height}" fill="white"/>\n`
  );
}

export function text(
  x: number,
  y: number,
  content: string,
  attrs = "",
): string {
  return `<text x="${fmt(x)}" y="${fmt(y)}" ${attrs}>${escapeXml(content)}</text>\n`;
}

export function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function line(
  x1: number,
  y1: number,
  x2: number,
  y2: number,
  attrs: string,
): string {
  return (
    `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
    `${attrs}/>\n`
  );
}
