// Browser shell: resizable panel grid hosting the views. The default
// layout opens Utilization, Gantt, Selection Info, and Source; the menu
// opens the rest. All analysis numbers come from view display snapshots,
// which in turn come from single API responses.

import { ApiClient } from "../api/client.js";
import { ViewHub } from "../state/hub.js";
import { UtilizationView } from "../views/utilization.js";
import { GanttView } from "../views/gantt.js";
import { AggGanttView } from "../views/agg-gantt.js";
import { TreeView } from "../views/tree.js";
import { HistogramView } from "../views/histogram.js";
import { BoxPlotView } from "../views/boxplot.js";
import { SelectionInfoView } from "../views/info.js";
import { SourceView } from "../views/source.js";
import { BAR_BLUE, SELECTION_YELLOW, purpleFor } from "../render/colors.js";

const LANE_HEIGHT = 26;
const CHART_HEIGHT = 120;

interface Panel {
  root: HTMLElement;
  body: HTMLElement;
}

function makePanel(container: HTMLElement, title: string, onClose: () => void): Panel {
  const root = document.createElement("section");
  root.className = "panel";
  const header = document.createElement("header");
  header.textContent = title;
  const close = document.createElement("button");
  close.textContent = "x";
  close.addEventListener("click", onClose);
  header.appendChild(close);
  const body = document.createElement("div");
  body.className = "panel-body";
  root.append(header, body);
  container.appendChild(root);
  return { root, body };
}

function paintArea(
  canvas: HTMLCanvasElement,
  values: number[],
  peak: number,
  color: string,
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null || values.length === 0) return;
  const w = canvas.width;
  const h = canvas.height;
  const px = w / values.length;
  ctx.fillStyle = color;
  for (let i = 0; i < values.length; i++) {
    const bar = (values[i] / peak) * h;
    ctx.fillRect(i * px, h - bar, Math.ceil(px), bar);
  }
}

export class App {
  private readonly client: ApiClient;
  private hub: ViewHub | null = null;
  private utilization: UtilizationView | null = null;
  private gantt: GanttView | null = null;
  private info: SelectionInfoView | null = null;
  private source: SourceView | null = null;
  private extras = new Map<string, Panel>();
  private grid: HTMLElement;

  constructor(
    private readonly rootEl: HTMLElement,
    baseUrl: string = "",
  ) {
    this.client = new ApiClient(baseUrl);
    this.grid = document.createElement("main");
    this.grid.className = "grid";
  }

  async start(): Promise<void> {
    const datasets = await this.client.listDatasets();
    if (datasets.length === 0) {
      this.rootEl.textContent = "no datasets bundled yet";
      return;
    }
    const wanted = new URLSearchParams(location.search).get("dataset");
    const meta =
      datasets.find((d) => d.dataset_id === wanted) ?? datasets[0];
    const hub = new ViewHub(meta.dataset_id, meta.time_end, meta.location_count);
    this.hub = hub;

    const menu = document.createElement("nav");
    for (const name of ["tree", "histogram", "agg-gantt", "boxplot"]) {
      const btn = document.createElement("button");
      btn.textContent = `open ${name}`;
      btn.addEventListener("click", () => void this.openExtra(name));
      menu.appendChild(btn);
    }
    this.rootEl.append(menu, this.grid);

    this.utilization = new UtilizationView("utilization", hub, this.client);
    this.utilization.attach();
    this.gantt = new GanttView("gantt", hub, this.client);
    this.gantt.attach();
    this.info = new SelectionInfoView("info", hub, this.client);
    this.info.attach();
    this.source = new SourceView("source", hub, this.client);

    this.mountUtilization();
    this.mountGantt();
    this.mountInfo();
    await this.source.load();
    this.mountSource();

    await this.utilization.refresh();
    await this.gantt.refresh();
    this.repaint();
    hub.subscribe(() => this.repaint());
  }

  private mountUtilization(): void {
    const view = this.utilization!;
    const panel = makePanel(this.grid, "utilization", () => panel.root.remove());
    const canvas = document.createElement("canvas");
    canvas.width = view.width;
    canvas.height = CHART_HEIGHT;
    panel.body.appendChild(canvas);
    let dragStart: number | null = null;
    const toTicks = (x: number): number =>
      Math.round((x / canvas.width) * this.hub!.span);
    canvas.addEventListener("mousedown", (e) => (dragStart = e.offsetX));
    canvas.addEventListener("mouseup", (e) => {
      if (dragStart === null) return;
      if (Math.abs(e.offsetX - dragStart) < 3) this.hub!.clearBrush();
      else view.brushTo(toTicks(dragStart), toTicks(e.offsetX));
      dragStart = null;
    });
    this.extras.set("utilization-canvas", { root: panel.root, body: panel.body });
  }

  private mountGantt(): void {
    const view = this.gantt!;
    const panel = makePanel(this.grid, "gantt", () => panel.root.remove());
    const canvas = document.createElement("canvas");
    canvas.width = view.width;
    canvas.height = LANE_HEIGHT * this.hub!.locationCount;
    panel.body.appendChild(canvas);
    canvas.addEventListener("click", (e) => {
      const lane = Math.floor(e.offsetY / LANE_HEIGHT);
      void view.clickPixel(e.offsetX, lane).then(() => this.repaint());
    });
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      const { t0, t1 } = this.hub!.temporalDomain();
      const step = Math.max(1, Math.round((t1 - t0) / 10));
      void view
        .panBy(e.deltaY > 0 ? step : -step)
        .then(() => this.repaint());
    });
    this.extras.set("gantt-canvas", { root: panel.root, body: panel.body });
  }

  private mountInfo(): void {
    const panel = makePanel(this.grid, "selection info", () => panel.root.remove());
    panel.body.classList.add("info-table");
    this.extras.set("info-panel", panel);
  }

  private mountSource(): void {
    const panel = makePanel(this.grid, "source", () => panel.root.remove());
    const pre = document.createElement("pre");
    for (const file of this.source!.files) {
      const head = document.createElement("div");
      head.className = "source-path";
      head.textContent = file.path;
      pre.appendChild(head);
      for (const token of file.tokens) {
        const span = document.createElement("span");
        span.className = `tok-${token.kind}`;
        span.textContent = token.text;
        pre.appendChild(span);
      }
    }
    if (this.source!.files.length === 0) pre.textContent = "(no source files)";
    panel.body.appendChild(pre);
  }

  private async openExtra(name: string): Promise<void> {
    if (this.extras.has(name) || this.hub === null) return;
    const panel = makePanel(this.grid, name, () => {
      panel.root.remove();
      this.extras.delete(name);
      this.hub!.closeView(name);
    });
    this.extras.set(name, panel);
    this.hub.openView(name);
    if (name === "tree") {
      const tree = new TreeView("tree", this.hub, this.client);
      await tree.load();
      const list = document.createElement("ul");
      for (const item of tree.visible()) {
        const li = document.createElement("li");
        li.style.paddingLeft = `${item.node.depth * 14}px`;
        li.style.background = item.fill;
        li.textContent = `${item.node.primitive} (${item.node.interval_count})`;
        li.title = tree.hoverLabel(item.node.node_id);
        li.addEventListener("click", () => tree.select(item.node.node_id));
        list.appendChild(li);
      }
      panel.body.appendChild(list);
    } else if (name === "histogram") {
      const hist = new HistogramView("histogram", this.hub, this.client);
      await hist.load();
      const bars = document.createElement("div");
      bars.className = "hist";
      const counts = hist.response?.counts ?? [];
      const peak = Math.max(1, ...counts);
      counts.forEach((count, i) => {
        const bar = document.createElement("div");
        bar.style.height = `${(count / peak) * 100}%`;
        bar.title = `${count}`;
        bar.addEventListener("click", () => hist.brushBins(i, i));
        bars.appendChild(bar);
      });
      panel.body.appendChild(bars);
    } else if (name === "agg-gantt") {
      const agg = new AggGanttView("agg-gantt", this.hub, this.client);
      agg.attach();
      const holder = document.createElement("div");
      holder.className = "agg";
      panel.body.appendChild(holder);
      this.hub.subscribe(() => {
        holder.textContent = "";
        const display = agg.display;
        if (display === null) {
          holder.textContent = "(select a tree node)";
          return;
        }
        const { t0, t1 } = display.domain;
        for (const bar of display.bars) {
          const el = document.createElement("div");
          el.className = "agg-bar";
          el.style.top = `${bar.row * LANE_HEIGHT}px`;
          el.style.left = `${((bar.start - t0) / (t1 - t0)) * 100}%`;
          el.style.width = `${((bar.end - bar.start) / (t1 - t0)) * 100}%`;
          el.style.background = purpleFor(0.4);
          holder.appendChild(el);
        }
      });
    } else if (name === "boxplot") {
      const counters = await this.client.counters(this.hub.datasetId);
      if (counters.length === 0) {
        panel.body.textContent = "(no counters in this trace)";
        return;
      }
      const box = new BoxPlotView("boxplot", this.hub, this.client, counters[0].name);
      box.attach();
      const canvas = document.createElement("canvas");
      canvas.width = box.width;
      canvas.height = CHART_HEIGHT;
      panel.body.appendChild(canvas);
      await box.refresh();
      const paint = (): void => {
        const display = box.display;
        const ctx = canvas.getContext("2d");
        if (display === null || ctx === null) return;
        ctx.clearRect(0, 0, canvas.width, canvas.height);
        const finite = display.max.filter((v): v is number => v !== null);
        const peak = Math.max(1e-9, ...finite);
        paintArea(
          canvas,
          display.mean.map((v) => v ?? 0),
          peak,
          purpleFor(0.6),
        );
      };
      paint();
      this.hub.subscribe(() => paint());
    }
  }

  private repaint(): void {
    const util = this.utilization;
    const utilPanel = this.extras.get("utilization-canvas");
    if (util?.display && utilPanel) {
      const canvas = utilPanel.body.querySelector("canvas");
      if (canvas) {
        const ctx = canvas.getContext("2d");
        if (ctx) {
          ctx.clearRect(0, 0, canvas.width, canvas.height);
          const peak = Math.max(1, ...util.display.values);
          paintArea(canvas, util.display.values, peak, BAR_BLUE);
          if (util.display.selection) {
            paintArea(canvas, util.display.selection, peak, SELECTION_YELLOW);
          }
          const { t0, t1 } = util.display.brush;
          ctx.strokeStyle = "#333";
          const x0 = (t0 / this.hub!.span) * canvas.width;
          const x1 = (t1 / this.hub!.span) * canvas.width;
          ctx.strokeRect(x0, 0, Math.max(1, x1 - x0), canvas.height);
        }
      }
    }
    const gantt = this.gantt;
    const ganttPanel = this.extras.get("gantt-canvas");
    if (gantt?.display && ganttPanel) {
      const canvas = ganttPanel.body.querySelector("canvas");
      const ctx = canvas?.getContext("2d") ?? null;
      if (canvas && ctx) {
        ctx.clearRect(0, 0, canvas.width, canvas.height);
        gantt.display.lanes.forEach((lane, row) => {
          const y = row * LANE_HEIGHT;
          const px = canvas.width / lane.ops.length;
          lane.ops.forEach((op, i) => {
            if (op.kind === "empty") return;
            const x = i * px;
            if (op.kind === "solid") {
              ctx.fillStyle = BAR_BLUE;
              ctx.globalAlpha = 1;
              ctx.fillRect(x, y + 4, Math.ceil(px), LANE_HEIGHT - 8);
            } else {
              // Density mark: shorter, translucent, weight-scaled.
              ctx.fillStyle = purpleFor(op.weight);
              ctx.globalAlpha = 0.35 + 0.65 * op.occupancy;
              const inset = 8 - 4 * op.weight;
              ctx.fillRect(x, y + inset, Math.ceil(px), LANE_HEIGHT - 2 * inset);
              ctx.globalAlpha = 1;
            }
            if (lane.selected?.[i]) {
              ctx.fillStyle = SELECTION_YELLOW;
              ctx.fillRect(x, y + LANE_HEIGHT - 4, Math.ceil(px), 3);
            }
          });
        });
      }
    }
    const infoPanel = this.extras.get("info-panel");
    if (this.info && infoPanel) {
      infoPanel.body.textContent = "";
      const table = document.createElement("table");
      for (const [label, value] of this.info.rows) {
        const tr = document.createElement("tr");
        const th = document.createElement("th");
        th.textContent = label;
        const td = document.createElement("td");
        td.textContent = value;
        tr.append(th, td);
        table.appendChild(tr);
      }
      infoPanel.body.appendChild(table);
    }
  }
}

export function boot(): void {
  const root = document.getElementById("app");
  if (root !== null) void new App(root).start();
}
