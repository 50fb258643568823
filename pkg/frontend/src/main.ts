/**
 * Browser wiring: a questionnaire card with two lottery buttons, progress
 * text, and a results dashboard (utility curve with its envelope, badges,
 * and an optional portfolio recommendation).
 */
import { ElicitClient } from "./api.js";
import { allocationChartSvg, utilityChartSvg } from "./chart.js";
import { QuestionnaireFlow } from "./flow.js";
import { lotterySentence } from "./lottery.js";
import { buildPortfolioView, buildResultsView } from "./results.js";
import type { Query } from "./schemas.js";

const $ = (id: string): HTMLElement => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
};

const client = new ElicitClient({ baseUrl: "" });
let flow: QuestionnaireFlow | null = null;
let sessionId: string | null = null;

function renderQuery(query: Query | null): void {
  const card = $("query-card");
  if (!query) {
    card.hidden = true;
    $("design-done").hidden = false;
    return;
  }
  card.hidden = false;
  $("design-done").hidden = true;
  $("option-w").textContent = lotterySentence(query.w).text;
  $("option-y").textContent = lotterySentence(query.y).text;
  $("round-label").textContent = `round ${query.round}`;
}

function renderProgress(): void {
  if (!flow) return;
  const p = flow.getProgress();
  $("progress").textContent =
    `${p.answered} answered · ${p.nBreakpoints} breakpoints`;
  const busy = flow.isBusy();
  ($("choose-w") as HTMLButtonElement).disabled = busy;
  ($("choose-y") as HTMLButtonElement).disabled = busy;
}

async function advance(): Promise<void> {
  if (!flow) return;
  renderQuery(await flow.loadNext());
  renderProgress();
}

async function choose(z: 1 | -1): Promise<void> {
  if (!flow) return;
  renderProgress();
  try {
    await flow.answer(z);
  } catch (err) {
    $("error").textContent = String(err);
    return;
  }
  $("error").textContent = "";
  await advance();
}

async function start(): Promise<void> {
  const created = await client.createSession({ quantum: 100.0 });
  sessionId = created.session_id;
  flow = new QuestionnaireFlow(client, sessionId);
  $("session-label").textContent = `session ${sessionId.slice(0, 8)}`;
  $("results").hidden = true;
  await advance();
}

async function estimate(): Promise<void> {
  if (!sessionId) return;
  const est = await client.estimate(sessionId);
  const view = buildResultsView(est);
  $("results").hidden = false;
  $("badges").innerHTML = view.badges
    .map((b) => `<span class="badge ${b.tone}">${b.label}: ${b.value}</span>`)
    .join(" ");
  $("chart").innerHTML = view.curve
    ? utilityChartSvg(view.curve, view.band)
    : "";
  $("more-queries").hidden = !view.needsMoreQueries;
}

async function recommend(): Promise<void> {
  if (!sessionId) return;
  const csv = ($("scenarios") as HTMLTextAreaElement).value;
  const budget = ($("budget") as HTMLInputElement).value;
  const caps = ($("caps") as HTMLInputElement).value
    .split(",")
    .map((c) => parseFloat(c.trim()));
  try {
    const rec = await client.recommend(sessionId, {
      scenarios_csv: csv,
      budget,
      caps,
    });
    const view = buildPortfolioView(rec);
    $("allocation").innerHTML = allocationChartSvg(view.bars, view.legend);
    $("portfolio-stats").textContent =
      `expected utility ${view.expectedUtility.toFixed(6)} · ` +
      `risk threshold ${view.riskThreshold.toFixed(6)} · ` +
      `robust ${view.robustRiskThreshold.toFixed(6)}` +
      (view.equivalenceHolds ? "" : " · objectives disagree");
  } catch (err) {
    $("error").textContent = String(err);
  }
}

export function wire(): void {
  $("start").addEventListener("click", () => void start());
  $("choose-w").addEventListener("click", () => void choose(1));
  $("choose-y").addEventListener("click", () => void choose(-1));
  $("estimate").addEventListener("click", () => void estimate());
  $("recommend").addEventListener("click", () => void recommend());
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  wire();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
