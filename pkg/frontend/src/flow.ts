/**
 * Questionnaire flow: fetch the next query, record exactly one choice per
 * card, guard against double submission, and track progress (answered count
 * K, current round, current breakpoint count N_r).
 */
import { ElicitClient } from "./api.js";
import type { Query } from "./schemas.js";

export interface Progress {
  answered: number;
  round: number;
  nBreakpoints: number;
  designComplete: boolean;
}

/** Maps a query card to the user's pick: +1 for W (left), -1 for Y (right). */
export type Chooser = (query: Query) => 1 | -1 | Promise<1 | -1>;

export class QuestionnaireFlow {
  private current: Query | null = null;
  private inFlight = false;
  private progress: Progress;

  constructor(
    private readonly client: ElicitClient,
    private readonly sessionId: string,
    initial?: Partial<Progress>,
  ) {
    this.progress = {
      answered: initial?.answered ?? 0,
      round: initial?.round ?? 1,
      nBreakpoints: initial?.nBreakpoints ?? 2,
      designComplete: false,
    };
  }

  getProgress(): Progress {
    return { ...this.progress };
  }

  getCurrent(): Query | null {
    return this.current;
  }

  /** True while a mutation is outstanding; the UI disables its buttons. */
  isBusy(): boolean {
    return this.inFlight;
  }

  /** Resume from server state (e.g. after a page refresh). */
  async sync(): Promise<Progress> {
    const info = await this.client.sessionInfo(this.sessionId);
    this.progress.answered = info.answered;
    this.progress.round = Math.max(info.round, 1);
    this.progress.nBreakpoints = info.n_breakpoints;
    return this.getProgress();
  }

  async loadNext(): Promise<Query | null> {
    const next = await this.client.nextQuery(this.sessionId);
    if ("design_complete" in next) {
      this.progress.designComplete = true;
      this.current = null;
      return null;
    }
    this.current = next;
    this.progress.round = next.round;
    return next;
  }

  /**
   * Record the user's pick for the current card.  Rejects overlapping
   * submissions; a duplicate ack (server already saw this answer) is treated
   * as success so a retried click cannot double-count.
   */
  async answer(z: 1 | -1): Promise<Progress> {
    if (!this.current) throw new Error("no query to answer");
    if (this.inFlight) throw new Error("a choice is already being submitted");
    this.inFlight = true;
    try {
      const ack = await this.client.submitChoice(this.sessionId, this.current.query_id, z);
      this.progress.answered = ack.answered;
      this.current = null;
      return this.getProgress();
    } finally {
      this.inFlight = false;
    }
  }

  /**
   * Demo autopilot: answer `count` queries with the supplied chooser (for
   * instance a simulated decision-maker), one at a time.
   */
  async autopilot(chooser: Chooser, count: number): Promise<Progress> {
    for (let i = 0; i < count; i++) {
      const query = this.current ?? (await this.loadNext());
      if (!query) break;
      await this.answer(await chooser(query));
    }
    await this.sync();
    return this.getProgress();
  }
}
