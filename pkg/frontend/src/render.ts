import * as echarts from "echarts";
import { AggregatePoint, Mode, panelKey, seriesLabel } from "./aggregate.js";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                 "#8c564b", "#e377c2", "#17becf"];

/** Render one panel (mean lines with shaded SEM bands) to an SVG string. */
export function renderPanel(title: string, xLabel: string,
                            series: Map<string, AggregatePoint[]>): string {
  const chart = echarts.init(null as any, undefined, {
    renderer: "svg", ssr: true, width: 640, height: 420,
  });
  const option: echarts.EChartsOption = {
    animation: false,
    title: { text: title, left: "center" },
    legend: { bottom: 0 },
    grid: { left: 60, right: 20, top: 50, bottom: 70 },
    xAxis: { type: "value", name: xLabel, nameLocation: "middle", nameGap: 28,
             scale: true },
    yAxis: { type: "value", name: "steps to goal", nameLocation: "middle", nameGap: 40,
             scale: true },
    series: [],
  };
  const all: echarts.SeriesOption[] = [];
  let colorIdx = 0;
  for (const [label, pts] of series) {
    const color = PALETTE[colorIdx++ % PALETTE.length];
    const sorted = [...pts].sort((a, b) => a.x - b.x);
    // confidence band: invisible lower line, stacked filled delta up to mean+sem
    all.push({
      name: `${label}-band-low`, type: "line", stack: `${label}-band`,
      data: sorted.map((p) => [p.x, p.mean_steps - p.sem_steps]),
      lineStyle: { opacity: 0 }, symbol: "none", silent: true,
      tooltip: { show: false },
    });
    all.push({
      name: `${label}-band`, type: "line", stack: `${label}-band`,
      data: sorted.map((p) => [p.x, 2 * p.sem_steps]),
      lineStyle: { opacity: 0 }, symbol: "none", silent: true,
      areaStyle: { color, opacity: 0.18 }, tooltip: { show: false },
    });
    all.push({
      name: label, type: "line",
      data: sorted.map((p) => [p.x, p.mean_steps]),
      itemStyle: { color }, lineStyle: { color },
    });
  }
  option.series = all;
  option.legend = { bottom: 0, data: [...series.keys()] };
  chart.setOption(option);
  const svg = chart.renderToSVGString();
  chart.dispose();
  return svg;
}

/** Group aggregated points into named panels of named series. */
export function buildPanels(points: AggregatePoint[], mode: Mode):
    Map<string, Map<string, AggregatePoint[]>> {
  const panels = new Map<string, Map<string, AggregatePoint[]>>();
  for (const p of points) {
    const pk = panelKey(p, mode);
    let panel = panels.get(pk);
    if (!panel) {
      panel = new Map();
      panels.set(pk, panel);
    }
    const label = seriesLabel(p, mode);
    let s = panel.get(label);
    if (!s) {
      s = [];
      panel.set(label, s);
    }
    s.push(p);
  }
  return panels;
}

/** Render every panel; returns file basename -> SVG text. */
export function renderComparison(points: AggregatePoint[], mode: Mode): Map<string, string> {
  const xLabel = mode === "algorithm" ? "possible locations per item" : "planning budget (s)";
  const titlePrefix = mode === "algorithm" ? "Algorithm Comparison" : "Time Comparison";
  const out = new Map<string, string>();
  for (const [pk, series] of buildPanels(points, mode)) {
    const svg = renderPanel(`${titlePrefix}: ${pk.replaceAll("_", " / ")}`, xLabel, series);
    out.set(`${mode}_${pk}.svg`, svg);
  }
  return out;
}
