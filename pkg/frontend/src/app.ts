import { ApiClient, ApiError } from "./api.js";
import type {
  EvalPayload,
  HistogramPayload,
  InstancePage,
} from "./types.js";

const TAG_LEVELS = ["none", "gt10", "gt40", "gt80"];
const TAG_COLORS: Record<string, string> = {
  none: "#c6dbef",
  gt10: "#6baed6",
  gt40: "#2171b5",
  gt80: "#08306b",
};
const PRESET_THRESHOLDS = [0.65, 0.5];
const METRICS: Array<keyof EvalPayload & string> = [
  "lamr",
  "precision",
  "recall",
  "f1",
];
// Lower is better only for LAMR.
const LOWER_IS_BETTER = new Set(["lamr"]);

export interface ExplorerOptions {
  subset?: string;
  iou?: number;
  conf?: number;
  debounceMs?: number;
  pageSize?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/**
 * Threshold-explorer single page app.
 *
 * All displayed metric values come verbatim from API payloads; the client
 * only decides what to show, never recomputes a metric.  In-flight request
 * tokens ensure only the response for the current threshold is rendered.
 */
export class ExplorerApp {
  threshold = 1.0;
  subset: string;
  private readonly iou: number;
  private readonly conf: number;
  private readonly debounceMs: number;
  private readonly pageSize: number;

  private baseline: EvalPayload | null = null;
  private histogramData: HistogramPayload | null = null;
  private requestSeq = 0;
  private debounceTimer: ReturnType<typeof setTimeout> | null = null;

  private readonly slider: HTMLInputElement;
  private readonly thresholdLabel: HTMLElement;
  private readonly histogramPane: HTMLElement;
  private readonly metricsPane: HTMLElement;
  private readonly galleryPane: HTMLElement;
  private readonly warningsPane: HTMLElement;
  private readonly errorBanner: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    options: ExplorerOptions = {},
  ) {
    this.subset = options.subset ?? "all";
    this.iou = options.iou ?? 0.5;
    this.conf = options.conf ?? 0.5;
    this.debounceMs = options.debounceMs ?? 150;
    this.pageSize = options.pageSize ?? 24;

    root.innerHTML = "";
    this.errorBanner = el("div", "error-banner");
    this.errorBanner.hidden = true;

    const controls = el("div", "controls");
    this.slider = el("input", "threshold-slider");
    this.slider.type = "range";
    this.slider.min = "0";
    this.slider.max = "1";
    this.slider.step = "0.01";
    this.slider.value = "1";
    this.slider.setAttribute("aria-label", "ambiguity pruning threshold");
    this.slider.addEventListener("input", () => {
      this.onThresholdChange(Number(this.slider.value));
    });
    this.thresholdLabel = el("span", "threshold-value", "1.00");
    controls.append(
      el("label", "threshold-label", "threshold "),
      this.slider,
      this.thresholdLabel,
    );
    for (const preset of PRESET_THRESHOLDS) {
      const button = el("button", "preset", `${preset}`);
      button.type = "button";
      button.dataset.preset = `${preset}`;
      button.addEventListener("click", () => this.onThresholdChange(preset));
      controls.append(button);
    }

    this.histogramPane = el("div", "histogram-pane");
    this.metricsPane = el("div", "metrics-pane");
    this.galleryPane = el("div", "gallery-pane");
    this.warningsPane = el("div", "warnings-pane");
    root.append(
      this.errorBanner,
      controls,
      this.metricsPane,
      this.warningsPane,
      this.histogramPane,
      this.galleryPane,
    );
  }

  async init(): Promise<void> {
    try {
      this.histogramData = await this.api.histogram();
      this.renderHistogram(this.histogramData);
    } catch (error) {
      this.showError(`histogram unavailable: ${describe(error)}`);
    }
    try {
      this.baseline = await this.api.whatIf(this.params(1.0));
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.metricsPane.textContent =
          "no detections loaded; what-if metrics unavailable";
      } else {
        this.showError(`baseline evaluation failed: ${describe(error)}`);
      }
    }
    await this.refresh(this.threshold);
  }

  /** Slider/preset handler: immediate label update, debounced fetches. */
  onThresholdChange(threshold: number): void {
    this.threshold = Math.min(1, Math.max(0, threshold));
    this.slider.value = `${this.threshold}`;
    this.thresholdLabel.textContent = this.threshold.toFixed(2);
    this.positionThresholdLine();
    if (this.debounceTimer !== null) clearTimeout(this.debounceTimer);
    this.debounceTimer = setTimeout(() => {
      this.debounceTimer = null;
      void this.refresh(this.threshold);
    }, this.debounceMs);
  }

  private params(threshold: number) {
    return {
      threshold,
      subset: this.subset,
      iou: this.iou,
      conf: this.conf,
    };
  }

  /** Fetch what-if metrics and the gallery band for one threshold. */
  private async refresh(threshold: number): Promise<void> {
    const token = ++this.requestSeq;
    const current = () =>
      token === this.requestSeq && threshold === this.threshold;

    if (this.baseline !== null) {
      try {
        const result = await this.api.whatIf(this.params(threshold));
        if (current()) {
          this.renderMetrics(result);
          this.metricsPane.classList.remove("stale");
        }
      } catch (error) {
        if (current()) this.markStale(describe(error));
      }
    }
    try {
      const page = await this.api.instances(threshold, 1.0, 1, this.pageSize);
      if (current()) this.renderGallery(page);
    } catch (error) {
      if (current()) this.markStale(describe(error));
    }
    if (current() && this.histogramData !== null) {
      this.renderWarnings(this.histogramData, threshold);
    }
  }

  private renderMetrics(result: EvalPayload): void {
    this.metricsPane.innerHTML = "";
    for (const metric of METRICS) {
      const value = result[metric] as number;
      const cell = el("div", `metric metric-${metric}`);
      cell.append(el("span", "metric-name", metric.toUpperCase()));
      const valueNode = el("span", "metric-value", formatMetric(value));
      valueNode.dataset.raw = `${value}`;
      cell.append(valueNode);
      if (this.baseline !== null) {
        const base = this.baseline[metric] as number;
        const delta = value - base;
        const arrow =
          delta === 0 ? "=" : improves(metric, delta) ? "▲" : "▼";
        const deltaNode = el(
          "span",
          "metric-delta",
          `${arrow} ${formatMetric(delta)} vs baseline`,
        );
        deltaNode.dataset.delta = `${delta}`;
        cell.append(deltaNode);
      }
      if (metric === "lamr" && result.lamr_floor) {
        cell.append(el("span", "metric-flag", "floor"));
      }
      this.metricsPane.append(cell);
    }
  }

  renderHistogram(payload: HistogramPayload): void {
    if (!validHistogram(payload)) {
      this.histogramData = null;
      this.histogramPane.innerHTML = "";
      this.showError("histogram payload has unexpected shape");
      return;
    }
    this.histogramPane.innerHTML = "";
    const chart = el("div", "histogram-chart");
    const bins = payload.counts.length;
    for (let i = 0; i < bins; i += 1) {
      const bar = el("div", "histogram-bar");
      bar.style.width = `${100 / bins}%`;
      bar.dataset.count = `${payload.counts[i]}`;
      bar.title =
        `[${payload.bin_edges[i].toFixed(2)}, ` +
        `${payload.bin_edges[i + 1].toFixed(2)}): ${payload.counts[i]}`;
      for (const level of TAG_LEVELS) {
        const fraction = payload.counts[i]
          ? payload.occlusion_proportions[level][i]
          : 0;
        const segment = el("div", `histogram-seg seg-${level}`);
        segment.style.height = `${fraction * 100}%`;
        segment.style.background = TAG_COLORS[level];
        segment.dataset.fraction = `${fraction}`;
        bar.append(segment);
      }
      chart.append(bar);
    }
    const line = el("div", "threshold-line");
    chart.append(line);
    this.histogramPane.append(chart);
    this.positionThresholdLine();
  }

  private positionThresholdLine(): void {
    const line = this.histogramPane.querySelector<HTMLElement>(
      ".threshold-line",
    );
    if (line) line.style.left = `${Number((this.threshold * 100).toFixed(4))}%`;
  }

  renderGallery(page: InstancePage): void {
    this.galleryPane.innerHTML = "";
    const grid = el("div", "gallery-grid");
    grid.dataset.total = `${page.total}`;
    for (const instance of page.instances) {
      const tile = el("figure", "gallery-tile");
      tile.dataset.instanceId = instance.instance_id;
      if (instance.crop_url) {
        const img = el("img", "gallery-crop");
        img.src = instance.crop_url;
        img.alt = `crop of ${instance.instance_id}`;
        img.addEventListener("error", () => {
          img.replaceWith(el("div", "gallery-placeholder", "no crop"));
        });
        tile.append(img);
      } else {
        const card = el("div", "gallery-card");
        card.append(
          el("div", "card-bbox", `bbox ${instance.bbox.join(", ")}`),
          el("div", "card-image", instance.image_id),
        );
        tile.append(card);
      }
      const caption = el("figcaption", "gallery-caption");
      const alpha = el("span", "tile-alpha", formatMetric(instance.ambiguity));
      alpha.dataset.raw = `${instance.ambiguity}`;
      caption.append(
        alpha,
        el("span", "tile-occlusion", ` occ ${instance.occlusion}`),
        el("span", "tile-truncation", ` trunc ${instance.truncation}`),
      );
      tile.append(caption);
      grid.append(tile);
    }
    this.galleryPane.append(grid);
  }

  /**
   * Qualitative over-pruning warning: a tag level whose above-threshold
   * share is far above the overall share would be disproportionately
   * removed.  Advisory text only; no derived numbers are displayed.
   */
  private renderWarnings(payload: HistogramPayload, threshold: number): void {
    this.warningsPane.innerHTML = "";
    const bins = payload.counts.length;
    const firstBin = Math.min(Math.floor(threshold * bins), bins - 1);
    const total = payload.counts.reduce((a, b) => a + b, 0);
    if (total === 0) return;
    let removedTotal = 0;
    for (let i = firstBin; i < bins; i += 1) removedTotal += payload.counts[i];
    const overall = removedTotal / total;
    for (const level of TAG_LEVELS.slice(1)) {
      let levelTotal = 0;
      let levelRemoved = 0;
      for (let i = 0; i < bins; i += 1) {
        const count =
          payload.counts[i] * payload.occlusion_proportions[level][i];
        levelTotal += count;
        if (i >= firstBin) levelRemoved += count;
      }
      if (levelTotal > 0 && overall > 0 && levelRemoved / levelTotal > 2 * overall) {
        this.warningsPane.append(
          el(
            "div",
            "overprune-warning",
            `pruning at ${threshold.toFixed(2)} disproportionately removes ` +
              `"occluded ${level}" instances`,
          ),
        );
      }
    }
  }

  private markStale(message: string): void {
    this.metricsPane.classList.add("stale");
    this.showError(message, true);
  }

  private showError(message: string, retryable = false): void {
    this.errorBanner.hidden = false;
    this.errorBanner.innerHTML = "";
    this.errorBanner.append(el("span", "error-text", message));
    if (retryable) {
      const retry = el("button", "retry", "retry");
      retry.type = "button";
      retry.addEventListener("click", () => {
        this.errorBanner.hidden = true;
        void this.refresh(this.threshold);
      });
      this.errorBanner.append(retry);
    }
  }
}

function formatMetric(value: number): string {
  return value.toFixed(4);
}

function improves(metric: string, delta: number): boolean {
  return LOWER_IS_BETTER.has(metric) ? delta < 0 : delta > 0;
}

function validHistogram(payload: HistogramPayload): boolean {
  if (!Array.isArray(payload.counts) || !Array.isArray(payload.bin_edges)) {
    return false;
  }
  if (payload.bin_edges.length !== payload.counts.length + 1) return false;
  return TAG_LEVELS.every(
    (level) =>
      Array.isArray(payload.occlusion_proportions?.[level]) &&
      payload.occlusion_proportions[level].length === payload.counts.length,
  );
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
