/**
 * Minimal SVG renderer: utility polyline with its envelope band, and a
 * horizontal bar chart for portfolio allocations.  Pure string output so the
 * same code runs in tests and in the browser.
 */
import type { AllocationBar, BandPoint, CurvePoint } from "./results.js";

export interface ChartSize {
  width: number;
  height: number;
  pad: number;
}

const DEFAULT_SIZE: ChartSize = { width: 640, height: 360, pad: 40 };

function scaleFactory(
  points: { y: number }[],
  values: number[],
  size: ChartSize,
): { sx: (y: number) => number; sy: (v: number) => number } {
  const ys = points.map((p) => p.y);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const vMin = Math.min(0, ...values);
  const vMax = Math.max(1, ...values);
  const { width, height, pad } = size;
  return {
    sx: (y) => pad + ((y - yMin) / (yMax - yMin || 1)) * (width - 2 * pad),
    sy: (v) => height - pad - ((v - vMin) / (vMax - vMin || 1)) * (height - 2 * pad),
  };
}

export function utilityChartSvg(
  curve: CurvePoint[],
  band: BandPoint[] | null,
  size: ChartSize = DEFAULT_SIZE,
): string {
  const values = [
    ...curve.map((p) => p.value),
    ...(band ? band.flatMap((b) => [b.lower, b.upper]) : []),
  ];
  const { sx, sy } = scaleFactory(band ?? curve, values, size);
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${size.width} ${size.height}" role="img">`,
  ];
  if (band) {
    const upper = band.map((b) => `${sx(b.y)},${sy(b.upper)}`);
    const lower = [...band].reverse().map((b) => `${sx(b.y)},${sy(b.lower)}`);
    parts.push(
      `<polygon class="band" points="${[...upper, ...lower].join(" ")}" ` +
        `fill="#9ecae1" opacity="0.45" stroke="none"/>`,
    );
  }
  const line = curve.map((p) => `${sx(p.y)},${sy(p.value)}`).join(" ");
  parts.push(
    `<polyline class="estimate" points="${line}" fill="none" stroke="#08519c" stroke-width="2"/>`,
  );
  for (const p of curve) {
    parts.push(
      `<circle class="breakpoint" cx="${sx(p.y)}" cy="${sy(p.value)}" r="3" fill="#08519c"/>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n");
}

export function allocationChartSvg(
  bars: AllocationBar[],
  legend: string,
  size: ChartSize = DEFAULT_SIZE,
): string {
  const { width, pad } = size;
  const rowH = 28;
  const height = pad * 2 + bars.length * rowH;
  const maxAmount = Math.max(...bars.map((b) => b.amount), 1e-12);
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" role="img">`,
    `<text class="legend" x="${pad}" y="${pad - 12}">${legend}</text>`,
  ];
  bars.forEach((bar, i) => {
    const y = pad + i * rowH;
    const w = ((width - 2 * pad - 120) * bar.amount) / maxAmount;
    parts.push(
      `<text x="${pad}" y="${y + 16}">${bar.asset}</text>`,
      `<rect class="bar" x="${pad + 80}" y="${y + 4}" width="${Math.max(w, 0)}" height="${rowH - 10}" fill="#31a354"/>`,
      `<text x="${pad + 86 + Math.max(w, 0)}" y="${y + 16}">${bar.amount.toFixed(2)} (${(bar.fraction * 100).toFixed(1)}%)</text>`,
    );
  });
  parts.push("</svg>");
  return parts.join("\n");
}
