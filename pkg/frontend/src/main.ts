/** Planner UI entry point: load the network, let the user pick districts or
 * paint individual edges, slide the capacity reduction, and color the map by
 * predicted volume change. */

import { ApiClient, EdgePrediction, NetworkDto } from "./api.js";
import { draw, fitTransform, RenderState, summarize } from "./render.js";
import { DEFAULT_COLOR_LIMIT, EXPANDED_COLOR_LIMIT } from "./scales.js";
import { Selection, WhatIfController } from "./whatif.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8000";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function start(): Promise<void> {
  const client = new ApiClient(SERVICE_URL);
  const canvas = el<HTMLCanvasElement>("map");
  const ctx = canvas.getContext("2d")!;
  const status = el<HTMLDivElement>("status");
  const summary = el<HTMLDivElement>("summary");
  const slider = el<HTMLInputElement>("reduction");
  const sliderLabel = el<HTMLSpanElement>("reduction-label");
  const districtList = el<HTMLDivElement>("districts");
  const expand = el<HTMLInputElement>("expand-scale");

  const [health, network, districts] = await Promise.all([
    client.health(),
    client.network(),
    client.districts(),
  ]);
  status.textContent = `connected — checkpoint ${health.checkpoint_id}`;

  const state: RenderState = {
    network,
    predictions: new Map<string, EdgePrediction>(),
    selectedDistricts: new Set<string>(),
    selectedEdges: new Set<string>(),
    colorLimit: DEFAULT_COLOR_LIMIT,
  };
  const selection = (): Selection => ({
    districts: state.selectedDistricts,
    edges: state.selectedEdges,
    reduction: Number(slider.value) / 100,
  });

  const controller = new WhatIfController(
    client,
    (res) => {
      state.predictions = new Map(res.predictions.map((p) => [p.edge_id, p]));
      const s = summarize(res.predictions, res.latency_ms);
      summary.innerHTML =
        `<b>${s.nEdges}</b> roads scored in ${s.latencyMs.toFixed(1)} ms<br>` +
        `mean change ${s.meanDelta.toFixed(1)} veh/h<br>` +
        `largest increase ${s.maxIncrease.toFixed(1)}, ` +
        `largest decrease ${s.maxDecrease.toFixed(1)}`;
      draw(ctx, state);
    },
    (err) => {
      status.textContent = `prediction failed: ${String(err)}`;
    },
  );

  const resubmit = () => {
    if (state.selectedDistricts.size || state.selectedEdges.size) {
      controller.submit(selection());
    } else {
      state.predictions.clear();
      summary.textContent = "select districts or paint roads to begin";
      draw(ctx, state);
    }
  };

  for (const id of districts.ids) {
    const btn = document.createElement("button");
    btn.textContent = id;
    btn.onclick = () => {
      if (state.selectedDistricts.has(id)) state.selectedDistricts.delete(id);
      else state.selectedDistricts.add(id);
      btn.classList.toggle("active");
      resubmit();
    };
    districtList.appendChild(btn);
  }

  slider.oninput = () => {
    sliderLabel.textContent = `${slider.value}%`;
    resubmit();
  };
  expand.onchange = () => {
    state.colorLimit = expand.checked
      ? EXPANDED_COLOR_LIMIT
      : DEFAULT_COLOR_LIMIT;
    draw(ctx, state);
  };

  canvas.onclick = (ev) => {
    const edge = nearestEdge(network, canvas, ev);
    if (!edge) return;
    if (state.selectedEdges.has(edge)) state.selectedEdges.delete(edge);
    else state.selectedEdges.add(edge);
    resubmit();
  };

  draw(ctx, state);
}

function nearestEdge(
  net: NetworkDto,
  canvas: HTMLCanvasElement,
  ev: MouseEvent,
): string | null {
  const rect = canvas.getBoundingClientRect();
  const mx = ev.clientX - rect.left;
  const my = ev.clientY - rect.top;
  const t = fitTransform(net, canvas.width, canvas.height);
  const pos = new Map(net.nodes.map((n) => [n.id, n]));
  let best: string | null = null;
  let bestDist = 8; // pixels
  for (const e of net.edges) {
    const a = pos.get(e.from)!;
    const b = pos.get(e.to)!;
    const ax = a.x * t.scale + t.ox;
    const ay = a.y * t.scale + t.oy;
    const bx = b.x * t.scale + t.ox;
    const by = b.y * t.scale + t.oy;
    const len2 = (bx - ax) ** 2 + (by - ay) ** 2;
    const u = len2
      ? Math.max(0, Math.min(1, ((mx - ax) * (bx - ax) + (my - ay) * (by - ay)) / len2))
      : 0;
    const d = Math.hypot(mx - (ax + u * (bx - ax)), my - (ay + u * (by - ay)));
    if (d < bestDist) {
      bestDist = d;
      best = e.id;
    }
  }
  return best;
}

start().catch((err) => {
  document.getElementById("status")!.textContent = `failed to start: ${err}`;
});
