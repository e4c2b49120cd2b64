// Dependency-free SVG charts. Scales are recomputed from the data on
// every render, so oscillating or drifting series never escape the
// frame; the console does no other arithmetic.

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#17becf", "#8c564b"];

export interface Series {
  label: string;
  x: number[];
  y: number[];
  dashed?: boolean;
  color?: string;
}

function extent(values: number[], pad = 0.08): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === Infinity) return [0, 1];
  if (lo === hi) {
    const eps = Math.abs(lo) * 0.1 + 1e-6;
    return [lo - eps, hi + eps];
  }
  const span = hi - lo;
  return [lo - pad * span, hi + pad * span];
}

function svgEl(width: number, height: number): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", "100%");
  svg.setAttribute("preserveAspectRatio", "none");
  return svg;
}

export function lineChart(host: HTMLElement, series: Series[],
    opts: { width?: number; height?: number; legend?: boolean } = {}):
    SVGSVGElement {
  const W = opts.width ?? 560;
  const H = opts.height ?? 220;
  const mL = 46;
  const mB = 22;
  const mT = 8;
  const mR = 8;
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y);
  const [x0, x1] = extent(xs, 0);
  const [y0, y1] = extent(ys);
  const sx = (x: number) => mL + ((x - x0) / (x1 - x0 || 1)) * (W - mL - mR);
  const sy = (y: number) => H - mB - ((y - y0) / (y1 - y0 || 1)) * (H - mB - mT);
  const svg = svgEl(W, H);

  const axis = document.createElementNS(svg.namespaceURI, "path");
  axis.setAttribute("d",
    `M ${mL} ${mT} L ${mL} ${H - mB} L ${W - mR} ${H - mB}`);
  axis.setAttribute("class", "axis");
  axis.setAttribute("fill", "none");
  axis.setAttribute("stroke", "#888");
  svg.appendChild(axis);

  for (const frac of [0, 0.5, 1]) {
    const yv = y0 + frac * (y1 - y0);
    const label = document.createElementNS(svg.namespaceURI, "text");
    label.setAttribute("x", "2");
    label.setAttribute("y", String(sy(yv) + 4));
    label.setAttribute("class", "tick");
    label.setAttribute("font-size", "10");
    label.textContent = yv.toPrecision(3);
    svg.appendChild(label);
  }
  const xlabel = document.createElementNS(svg.namespaceURI, "text");
  xlabel.setAttribute("x", String(W - mR - 30));
  xlabel.setAttribute("y", String(H - 6));
  xlabel.setAttribute("font-size", "10");
  xlabel.textContent = `t=${x1.toPrecision(4)}`;
  svg.appendChild(xlabel);

  series.forEach((s, i) => {
    if (!s.x.length) return;
    const pts = s.x.map((x, k) => `${sx(x).toFixed(2)},${sy(s.y[k]).toFixed(2)}`);
    const line = document.createElementNS(svg.namespaceURI, "polyline");
    line.setAttribute("points", pts.join(" "));
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", s.color ?? PALETTE[i % PALETTE.length]);
    line.setAttribute("stroke-width", "1.6");
    if (s.dashed) line.setAttribute("stroke-dasharray", "6 4");
    line.setAttribute("data-series", s.label);
    svg.appendChild(line);
  });

  if (opts.legend !== false) {
    series.forEach((s, i) => {
      const t = document.createElementNS(svg.namespaceURI, "text");
      t.setAttribute("x", String(mL + 6 + i * 96));
      t.setAttribute("y", String(mT + 10));
      t.setAttribute("font-size", "10");
      t.setAttribute("fill", s.color ?? PALETTE[i % PALETTE.length]);
      t.textContent = s.label;
      svg.appendChild(t);
    });
  }

  host.replaceChildren(svg);
  return svg;
}

export function barChart(host: HTMLElement, labels: string[],
    values: number[], opts: { width?: number; height?: number } = {}):
    SVGSVGElement {
  const W = opts.width ?? 280;
  const H = opts.height ?? 180;
  const mB = 26;
  const [lo, hi] = extent([0, ...values]);
  const svg = svgEl(W, H);
  const bw = (W - 20) / Math.max(values.length, 1);
  values.forEach((v, i) => {
    const h = ((v - Math.min(lo, 0)) / (hi - Math.min(lo, 0) || 1)) * (H - mB - 8);
    const rect = document.createElementNS(svg.namespaceURI, "rect");
    rect.setAttribute("x", String(10 + i * bw + 3));
    rect.setAttribute("y", String(H - mB - h));
    rect.setAttribute("width", String(bw - 6));
    rect.setAttribute("height", String(Math.max(h, 0)));
    rect.setAttribute("fill", PALETTE[i % PALETTE.length]);
    rect.setAttribute("data-bar", labels[i]);
    svg.appendChild(rect);
    const t = document.createElementNS(svg.namespaceURI, "text");
    t.setAttribute("x", String(10 + i * bw + bw / 2));
    t.setAttribute("y", String(H - 10));
    t.setAttribute("text-anchor", "middle");
    t.setAttribute("font-size", "9");
    t.textContent = `${labels[i]} ${v.toPrecision(3)}`;
    svg.appendChild(t);
  });
  host.replaceChildren(svg);
  return svg;
}

export function halfPlaneChart(host: HTMLElement,
    points: [number, number][],
    opts: { width?: number; height?: number } = {}): SVGSVGElement {
  const W = opts.width ?? 280;
  const H = opts.height ?? 180;
  const res = points.map((p) => p[0]);
  const ims = points.map((p) => p[1]);
  const [x0, x1] = extent([...res, 0]);
  const [y0, y1] = extent([...ims, 0]);
  const sx = (x: number) => 8 + ((x - x0) / (x1 - x0 || 1)) * (W - 16);
  const sy = (y: number) => H - 8 - ((y - y0) / (y1 - y0 || 1)) * (H - 16);
  const svg = svgEl(W, H);
  const yAxis = document.createElementNS(svg.namespaceURI, "line");
  yAxis.setAttribute("x1", String(sx(0)));
  yAxis.setAttribute("x2", String(sx(0)));
  yAxis.setAttribute("y1", "4");
  yAxis.setAttribute("y2", String(H - 4));
  yAxis.setAttribute("stroke", "#c33");
  yAxis.setAttribute("stroke-dasharray", "4 3");
  svg.appendChild(yAxis);
  const xAxis = document.createElementNS(svg.namespaceURI, "line");
  xAxis.setAttribute("x1", "4");
  xAxis.setAttribute("x2", String(W - 4));
  xAxis.setAttribute("y1", String(sy(0)));
  xAxis.setAttribute("y2", String(sy(0)));
  xAxis.setAttribute("stroke", "#bbb");
  svg.appendChild(xAxis);
  points.forEach(([re, im]) => {
    const c = document.createElementNS(svg.namespaceURI, "circle");
    c.setAttribute("cx", String(sx(re)));
    c.setAttribute("cy", String(sy(im)));
    c.setAttribute("r", "4");
    c.setAttribute("fill", re < 0 ? "#2ca02c" : "#d62728");
    c.setAttribute("data-eigenvalue", `${re},${im}`);
    svg.appendChild(c);
  });
  host.replaceChildren(svg);
  return svg;
}
