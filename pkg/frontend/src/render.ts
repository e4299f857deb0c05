/** Canvas rendering of the road network with prediction overlays. */

import { EdgePrediction, NetworkDto } from "./api.js";
import { colorForPercentChange, strokeWidth } from "./scales.js";

export interface RenderState {
  network: NetworkDto;
  predictions: Map<string, EdgePrediction>;
  selectedDistricts: Set<string>;
  selectedEdges: Set<string>;
  colorLimit: number;
}

interface Transform {
  scale: number;
  ox: number;
  oy: number;
}

export function fitTransform(
  net: NetworkDto,
  width: number,
  height: number,
  margin = 20,
): Transform {
  const xs = net.nodes.map((n) => n.x);
  const ys = net.nodes.map((n) => n.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const scale = Math.min(
    (width - 2 * margin) / Math.max(maxX - minX, 1),
    (height - 2 * margin) / Math.max(maxY - minY, 1),
  );
  return { scale, ox: margin - minX * scale, oy: margin - minY * scale };
}

export function draw(ctx: CanvasRenderingContext2D, state: RenderState): void {
  const { network } = state;
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const t = fitTransform(network, width, height);
  const pos = new Map(network.nodes.map((n) => [n.id, n]));

  for (const e of network.edges) {
    const a = pos.get(e.from);
    const b = pos.get(e.to);
    if (!a || !b) continue;
    const pred = state.predictions.get(e.id);
    ctx.strokeStyle = pred
      ? colorForPercentChange(pred.percent_change, state.colorLimit)
      : "rgb(200,200,200)";
    ctx.lineWidth = strokeWidth(e.highway_class);
    const selected =
      state.selectedEdges.has(e.id) ||
      (e.district !== null && state.selectedDistricts.has(e.district));
    if (selected) ctx.lineWidth += 2;
    ctx.beginPath();
    ctx.moveTo(a.x * t.scale + t.ox, a.y * t.scale + t.oy);
    ctx.lineTo(b.x * t.scale + t.ox, b.y * t.scale + t.oy);
    ctx.stroke();
  }
}

export interface Summary {
  nEdges: number;
  meanDelta: number;
  maxIncrease: number;
  maxDecrease: number;
  latencyMs: number;
}

export function summarize(
  predictions: EdgePrediction[],
  latencyMs: number,
): Summary {
  const deltas = predictions.map((p) => p.delta_volume);
  const sum = deltas.reduce((a, b) => a + b, 0);
  return {
    nEdges: predictions.length,
    meanDelta: predictions.length ? sum / predictions.length : 0,
    maxIncrease: deltas.length ? Math.max(...deltas) : 0,
    maxDecrease: deltas.length ? Math.min(...deltas) : 0,
    latencyMs,
  };
}
