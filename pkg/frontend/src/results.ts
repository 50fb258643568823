/**
 * View models for the results dashboard.  Pure transformations of service
 * payloads: no model math happens here, only reshaping for display.
 */
import type { Estimate, Recommendation } from "./schemas.js";

export interface CurvePoint {
  y: number;
  value: number;
}

export interface BandPoint {
  y: number;
  lower: number;
  upper: number;
}

export interface Badge {
  label: string;
  value: string;
  tone: "ok" | "warn" | "error" | "info";
}

export interface ResultsViewModel {
  status: Estimate["status"];
  /** Normalized utility polyline, pinned at (0, 0) and (b_bar, 1). */
  curve: CurvePoint[] | null;
  /** Pointwise envelope of utilities consistent with the data, if unique. */
  band: BandPoint[] | null;
  badges: Badge[];
  /** Set when the data admits no utility; prompts collecting more queries. */
  needsMoreQueries: boolean;
}

function fmt(x: number, digits = 4): string {
  return Number.isFinite(x) ? x.toPrecision(digits) : "∞";
}

export function buildResultsView(est: Estimate): ResultsViewModel {
  const curve = est.utility
    ? est.utility.grid.map((y, i) => ({ y, value: est.utility!.alpha[i]! }))
    : null;
  const band = est.band
    ? est.band.y.map((y, i) => ({
        y: parseFloat(y),
        lower: est.band!.lower[i]!,
        upper: est.band!.upper[i]!,
      }))
    : null;

  const badges: Badge[] = [
    {
      label: "status",
      value: est.status,
      tone:
        est.status === "Unique"
          ? "ok"
          : est.status === "NotRationalizable"
            ? "error"
            : "warn",
    },
    {
      label: "σ̂",
      value: est.sigma_hat === null ? "undefined" : fmt(est.sigma_hat),
      tone: est.sigma_hat === null ? "error" : "info",
    },
    {
      label: "rank",
      value: `${est.sigma_d_rank} / ${est.grid.length - 1}`,
      tone: est.sigma_d_rank === est.grid.length - 1 ? "ok" : "warn",
    },
    { label: "λ_min", value: fmt(est.lambda_min), tone: "info" },
    {
      label: `ℓ2 bound (δ=${est.bounds.delta})`,
      value: est.bounds.vacuous
        ? `${fmt(est.bounds.l2_bound, 3)} (vacuous)`
        : fmt(est.bounds.l2_bound),
      tone: est.bounds.vacuous ? "warn" : "ok",
    },
    { label: "answered", value: String(est.answered), tone: "info" },
  ];

  return {
    status: est.status,
    curve,
    band,
    badges,
    needsMoreQueries: est.status === "NotRationalizable",
  };
}

export interface AllocationBar {
  asset: string;
  amount: number;
  fraction: number;
}

export interface PortfolioViewModel {
  bars: AllocationBar[];
  /** Total of the allocation amounts (equals the budget sent to the server). */
  total: number;
  legend: string;
  expectedUtility: number;
  riskThreshold: number;
  robustRiskThreshold: number;
  equivalenceHolds: boolean;
}

export function buildPortfolioView(rec: Recommendation): PortfolioViewModel {
  const amounts = rec.allocation.map((a) => parseFloat(a));
  const total = amounts.reduce((s, v) => s + v, 0);
  const bars = amounts.map((amount, i) => ({
    asset: i === 0 ? "cash" : `asset_${i}`,
    amount,
    fraction: total > 0 ? amount / total : 0,
  }));
  return {
    bars,
    total,
    legend: `allocated ${total.toFixed(2)} across ${bars.length} assets`,
    expectedUtility: rec.eu_value,
    riskThreshold: rec.par_value,
    robustRiskThreshold: rec.prar_value,
    equivalenceHolds: rec.equivalence_holds,
  };
}
