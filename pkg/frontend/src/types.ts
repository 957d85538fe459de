/** Payload types mirrored from the ambiprune HTTP API. */

export interface DatasetSummary {
  name: string;
  images: number;
  instances: number;
  scored: number;
  ambiguity_mean: number | null;
  ambiguity_quantiles: Record<string, number>;
  provenance: Array<Record<string, unknown>>;
}

export interface HistogramPayload {
  bin_edges: number[];
  counts: number[];
  occlusion_proportions: Record<string, number[]>;
  truncation_proportions: Record<string, number[]>;
  peak_bins: {
    occlusion: Record<string, number>;
    truncation: Record<string, number>;
  };
}

export interface InstanceEntry {
  instance_id: string;
  image_id: string;
  bbox: [number, number, number, number];
  identity: string;
  occlusion: string;
  truncation: string;
  ambiguity: number;
  ignore: boolean;
  crop_url?: string;
}

export interface InstancePage {
  total: number;
  page: number;
  page_size: number;
  instances: InstanceEntry[];
}

export interface EvalPayload {
  subset: string;
  lamr: number;
  lamr_floor: boolean;
  curve: Array<[number, number]>;
  precision: number;
  recall: number;
  f1: number;
  tp: number;
  fp: number;
  fn: number;
  degenerate_precision: boolean;
  dataset_provenance: Array<Record<string, unknown>>;
}

export interface WhatIfParams {
  threshold: number;
  subset: string;
  iou: number;
  conf: number;
}
