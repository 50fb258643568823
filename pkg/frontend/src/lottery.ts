/**
 * Plain-language rendering of lottery payloads: each named outcome becomes
 * "A p% chance at winning $v", the residual mass becomes "otherwise $0".
 */
import type { Lottery, Outcome } from "./schemas.js";

const PERCENT_EPS = 1e-9;

export function formatMoney(payoff: string): string {
  const [whole = "", frac] = payoff.split(".");
  const sign = whole.startsWith("-") ? "-" : "";
  const digits = sign ? whole.slice(1) : whole;
  const grouped = digits.replace(/\B(?=(\d{3})+(?!\d))/g, ",");
  return `$${sign}${grouped}${frac ? "." + frac : ""}`;
}

export function formatPercent(prob: number): string {
  const pct = prob * 100;
  const rounded = Math.round(pct * 100) / 100;
  return `${rounded}%`;
}

export interface LotterySentence {
  /** One sentence per named (nonzero-payoff) outcome. */
  clauses: string[];
  /** Probability mass left on $0 (shown as "otherwise $0"), in [0, 1]. */
  residual: number;
  text: string;
}

/**
 * "A 30% chance at winning $42,500; otherwise $0."  Zero payoffs are folded
 * into the residual clause; named probabilities always sum to <= 100%.
 */
export function lotterySentence(lot: Lottery): LotterySentence {
  const named: Outcome[] = [];
  let residual = 0;
  for (const o of lot.outcomes) {
    if (parseFloat(o.payoff) === 0) {
      residual += o.prob;
    } else {
      named.push(o);
    }
  }
  const total = named.reduce((s, o) => s + o.prob, 0);
  if (total > 1 + PERCENT_EPS) {
    throw new Error(`named outcome probabilities sum to ${total} > 1`);
  }
  residual += Math.max(0, 1 - total - residual);
  const clauses = named.map(
    (o) => `A ${formatPercent(o.prob)} chance at winning ${formatMoney(o.payoff)}`,
  );
  let text: string;
  if (clauses.length === 0) {
    text = "$0 for certain.";
  } else if (residual > PERCENT_EPS) {
    text = `${clauses.join("; ")}; otherwise $0.`;
  } else if (clauses.length === 1 && named[0]!.prob >= 1 - PERCENT_EPS) {
    text = `${formatMoney(named[0]!.payoff)} for certain.`;
  } else {
    text = `${clauses.join("; ")}.`;
  }
  return { clauses, residual, text };
}
