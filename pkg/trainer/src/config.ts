/** Problem configuration mirroring the reconstruction package's config schema. */

export const C0 = 299792458.0; // speed of light in vacuum, m/s

export interface ProblemConfig {
  frequency_hz: number;
  grid_nx: number;
  grid_ny: number;
  pixel_size_m: number;
  tx_count: number;
  rx_count: number;
  transceiver_radius_m: number;
  n_bim: number;
  n_lwb: number;
  n_bcg: number;
  n_pow: number;
  sbim_delta: number;
  snr_db: number | "noiseless";
}

export function configFromMeta(meta: Record<string, unknown>): ProblemConfig {
  const cfg = meta["config"] as ProblemConfig | undefined;
  if (!cfg) throw new Error("dataset manifest has no config in meta");
  return cfg;
}

export function k0(config: ProblemConfig): number {
  return (2.0 * Math.PI * config.frequency_hz) / C0;
}

export function nPixels(config: ProblemConfig): number {
  return config.grid_nx * config.grid_ny;
}

export function nMeasurements(config: ProblemConfig): number {
  return config.rx_count * config.tx_count;
}
