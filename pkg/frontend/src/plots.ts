/**
 * Rolling strip charts drawn straight onto canvases: pixel error norm, the
 * estimated vs true depth, and the Lyapunov value (log scale).
 */

export interface Series {
  label: string;
  color: string;
  values: (sample: { t: number; e: number; zHat: number; zTrue: number; V: number }) => number;
}

export function drawStrip(
  canvas: HTMLCanvasElement,
  history: Array<{ t: number; e: number; zHat: number; zTrue: number; V: number }>,
  series: Series[],
  logScale = false,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#333";
  ctx.strokeRect(0, 0, width, height);
  if (history.length < 2) return;

  const transform = (v: number) => (logScale ? Math.log10(Math.max(v, 1e-12)) : v);
  let lo = Infinity;
  let hi = -Infinity;
  for (const s of series) {
    for (const sample of history) {
      const v = transform(s.values(sample));
      if (Number.isFinite(v)) {
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
    }
  }
  if (!Number.isFinite(lo) || !Number.isFinite(hi)) return;
  if (hi - lo < 1e-9) hi = lo + 1;
  const t0 = history[0].t;
  const t1 = history[history.length - 1].t;
  const span = Math.max(t1 - t0, 1e-9);

  ctx.font = "10px sans-serif";
  let legendX = 6;
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    history.forEach((sample, i) => {
      const px = ((sample.t - t0) / span) * (width - 8) + 4;
      const py = height - 4 - ((transform(s.values(sample)) - lo) / (hi - lo)) * (height - 8);
      if (i === 0) ctx.moveTo(px, py);
      else ctx.lineTo(px, py);
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, legendX, 12);
    legendX += ctx.measureText(s.label).width + 12;
  }
}
