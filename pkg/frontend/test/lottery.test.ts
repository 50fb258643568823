import { describe, expect, it } from "vitest";
import { formatMoney, formatPercent, lotterySentence } from "../src/lottery.js";
import { QuerySchema } from "../src/schemas.js";
import { fixture } from "./fixtures.js";

describe("money and percent formatting", () => {
  it("groups thousands", () => {
    expect(formatMoney("42500")).toBe("$42,500");
    expect(formatMoney("100000")).toBe("$100,000");
    expect(formatMoney("0")).toBe("$0");
    expect(formatMoney("1234567.5")).toBe("$1,234,567.5");
    expect(formatMoney("-2500")).toBe("$-2,500");
  });

  it("renders probabilities as percentages", () => {
    expect(formatPercent(0.3)).toBe("30%");
    expect(formatPercent(1)).toBe("100%");
    expect(formatPercent(0.05)).toBe("5%");
    expect(formatPercent(0.125)).toBe("12.5%");
  });
});

describe("lottery sentences", () => {
  it("renders the canonical single-outcome form", () => {
    const s = lotterySentence({
      outcomes: [{ payoff: "42500", prob: 0.3 }],
    });
    expect(s.text).toBe("A 30% chance at winning $42,500; otherwise $0.");
    expect(s.residual).toBeCloseTo(0.7, 12);
  });

  it("folds explicit zero payoffs into the residual clause", () => {
    const s = lotterySentence({
      outcomes: [
        { payoff: "0", prob: 0.5 },
        { payoff: "100000", prob: 0.5 },
      ],
    });
    expect(s.text).toBe("A 50% chance at winning $100,000; otherwise $0.");
    expect(s.clauses).toHaveLength(1);
    expect(s.residual).toBeCloseTo(0.5, 12);
  });

  it("joins several named outcomes with semicolons", () => {
    const s = lotterySentence({
      outcomes: [
        { payoff: "10000", prob: 0.25 },
        { payoff: "55000", prob: 0.1 },
      ],
    });
    expect(s.text).toBe(
      "A 25% chance at winning $10,000; A 10% chance at winning $55,000; otherwise $0.",
    );
    expect(s.residual).toBeCloseTo(0.65, 12);
  });

  it("renders degenerate lotteries as certainties", () => {
    expect(lotterySentence({ outcomes: [{ payoff: "0", prob: 1 }] }).text).toBe(
      "$0 for certain.",
    );
    expect(
      lotterySentence({ outcomes: [{ payoff: "25000", prob: 1 }] }).text,
    ).toBe("$25,000 for certain.");
  });

  it("rejects named probabilities summing past 100%", () => {
    expect(() =>
      lotterySentence({
        outcomes: [
          { payoff: "100", prob: 0.7 },
          { payoff: "200", prob: 0.6 },
        ],
      }),
    ).toThrow(/sum/);
  });

  it("renders every recorded query with residual mass in [0, 1]", () => {
    for (const name of ["query", "query_mid_round"]) {
      const q = QuerySchema.parse(fixture(name));
      for (const lot of [q.w, q.y]) {
        const s = lotterySentence(lot);
        expect(s.residual).toBeGreaterThanOrEqual(0);
        expect(s.residual).toBeLessThanOrEqual(1);
        expect(s.text.endsWith(".")).toBe(true);
      }
    }
  });
});
