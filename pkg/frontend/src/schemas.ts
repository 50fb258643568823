/**
 * Zod schemas for every service payload the UI consumes.  The UI never
 * computes model math: everything rendered round-trips through these shapes.
 *
 * Conventions: money amounts are decimal strings; probabilities are decimals
 * with at most 12 fractional digits.
 */
import { z } from "zod";

/** A decimal string such as "42500" or "0.5" (money amounts). */
export const MoneyString = z.string().regex(/^-?\d+(\.\d+)?$/);

export const Probability = z
  .number()
  .min(0)
  .max(1)
  .refine((p) => Math.round(p * 1e12) / 1e12 === p, {
    message: "probability carries more than 12 fractional digits",
  });

export const OutcomeSchema = z.object({
  payoff: MoneyString,
  prob: Probability,
});

export const LotterySchema = z.object({
  outcomes: z.array(OutcomeSchema).min(1),
});

export const SessionConfigSchema = z.object({
  L: z.number().positive(),
  c_bar: z.number().positive(),
  b_bar: z.number().positive(),
  delta: z.number().gt(0).lt(1),
  structure: z.enum(["full", "nolip", "mono", "none"]),
  quantum: z.number().positive(),
});

export const SessionCreatedSchema = z.object({
  session_id: z.string().min(1),
  status: z.enum(["Collecting", "Estimated"]),
  config: SessionConfigSchema,
});

export const SessionInfoSchema = z.object({
  session_id: z.string().min(1),
  status: z.enum(["Collecting", "Estimated"]),
  config: SessionConfigSchema,
  round: z.number().int().nonnegative(),
  n_breakpoints: z.number().int().min(2),
  grid: z.array(MoneyString).min(2),
  issued: z.number().int().nonnegative(),
  answered: z.number().int().nonnegative(),
});

export const QuerySchema = z.object({
  query_id: z.string().min(1),
  round: z.number().int().positive(),
  w: LotterySchema,
  y: LotterySchema,
});

/** The server signals a finished design instead of another query. */
export const DesignCompleteSchema = z.object({
  design_complete: z.literal(true),
});

export const NextQuerySchema = z.union([QuerySchema, DesignCompleteSchema]);

export const ChoiceAckSchema = z.object({
  answered: z.number().int().positive(),
  duplicate: z.boolean(),
});

export const EstimateStatusSchema = z.enum([
  "Unique",
  "NonUniqueRankDeficient",
  "NotRationalizable",
  "SeparationAtBound",
]);

export const BoundsSchema = z.object({
  delta: z.number().gt(0).lt(1),
  lambda: z.number().nonnegative(),
  log_omega: z.number(),
  weighted_norm_bound: z.number().nullable().or(z.number()),
  l2_bound: z.number(),
  linf_bound: z.number(),
  kolmogorov_bound: z.number(),
  regime: z.enum(["FullRank", "RankDeficient"]),
  vacuous: z.boolean(),
});

export const UtilitySchema = z.object({
  grid: z.array(z.number()),
  b_bar: z.number().positive(),
  alpha: z.array(z.number()),
  beta: z.array(z.number()),
  normalized: z.boolean(),
});

export const BandSchema = z.object({
  y: z.array(MoneyString),
  lower: z.array(z.number()),
  upper: z.array(z.number()),
});

export const EstimateSchema = z.object({
  gamma_star: z.number().nonnegative(),
  alpha_bar: z.array(z.number()),
  sigma_hat: z.number().positive().nullable(),
  loglik: z.number(),
  status: EstimateStatusSchema,
  utility: UtilitySchema.nullable(),
  sigma_d_rank: z.number().int().nonnegative(),
  sigma_d_eigenvalues: z.array(z.number()),
  lambda_min: z.number(),
  gamma_zero_tol: z.number().positive(),
  grid: z.array(MoneyString).min(2),
  bounds: BoundsSchema,
  answered: z.number().int().positive(),
  band: BandSchema.nullable(),
});

export const RecommendationSchema = z.object({
  allocation: z.array(MoneyString).min(1),
  eu_value: z.number(),
  par_value: z.number(),
  prar_value: z.number(),
  offset: z.number(),
  equivalence_holds: z.boolean(),
});

export type Outcome = z.infer<typeof OutcomeSchema>;
export type Lottery = z.infer<typeof LotterySchema>;
export type SessionCreated = z.infer<typeof SessionCreatedSchema>;
export type SessionInfo = z.infer<typeof SessionInfoSchema>;
export type Query = z.infer<typeof QuerySchema>;
export type NextQuery = z.infer<typeof NextQuerySchema>;
export type ChoiceAck = z.infer<typeof ChoiceAckSchema>;
export type Estimate = z.infer<typeof EstimateSchema>;
export type Recommendation = z.infer<typeof RecommendationSchema>;
