#!/usr/bin/env python3
"""Record service payloads as JSON fixtures for the browser UI's contract
tests.  Drives the real HTTP app in-process with a simulated decision-maker
so the fixtures are genuine server output, not hand-written samples.

Usage:  python3 scripts/record_fixtures.py  [output_dir]
Writes frontend/test/fixtures/*.json by default.
"""

import json
import os
import sys
import tempfile

import numpy as np
from fastapi.testclient import TestClient

from vnm_elicit.service import create_app
from vnm_elicit.simulate import true_utility_paper

# net returns per scenario; column 0 is the risk-free asset (cash)
SCENARIOS_CSV = (
    "asset_0,asset_1,asset_2\n"
    "0.0,0.08,-0.08\n"
    "0.0,-0.05,0.10\n"
    "0.0,0.02,0.01\n"
    "0.0,-0.10,0.20\n"
)


def _eu(lottery_payload: dict) -> float:
    return sum(o["prob"] * true_utility_paper(float(o["payoff"]))
               for o in lottery_payload["outcomes"])


def _answer(client: TestClient, sid: str, count: int, chooser) -> list:
    answered = []
    for _ in range(count):
        q = client.get(f"/sessions/{sid}/query").json()
        if q.get("design_complete"):
            break
        z = chooser(q)
        r = client.post(f"/sessions/{sid}/choices",
                        json={"query_id": q["query_id"], "z": z})
        r.raise_for_status()
        answered.append((q, z))
    return answered


def main() -> None:
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "frontend", "test", "fixtures")
    out_dir = os.path.abspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    fixtures: dict[str, object] = {}

    rng = np.random.default_rng(7)
    sigma = 0.05  # light noise: keeps the data rationalizable but not separable

    def noisy_chooser(q: dict) -> int:
        gap = _eu(q["w"]) - _eu(q["y"])
        eps = rng.gumbel(size=2) * sigma
        return +1 if gap + eps[0] - eps[1] >= 0 else -1

    with tempfile.TemporaryDirectory() as data_dir:
        client = TestClient(create_app(data_dir))

        created = client.post("/sessions", json={"quantum": 100.0}).json()
        sid = created["session_id"]
        fixtures["session_created"] = created

        answered = _answer(client, sid, 40, noisy_chooser)
        fixtures["query"] = answered[0][0]
        fixtures["query_mid_round"] = answered[len(answered) // 2][0]

        last_q, last_z = answered[-1]
        dup = client.post(f"/sessions/{sid}/choices",
                          json={"query_id": last_q["query_id"],
                                "z": last_z}).json()
        fixtures["choice_ack_duplicate"] = dup

        fresh = client.get(f"/sessions/{sid}/query").json()
        ack = client.post(f"/sessions/{sid}/choices",
                          json={"query_id": fresh["query_id"],
                                "z": noisy_chooser(fresh)}).json()
        fixtures["choice_ack"] = ack

        fixtures["session_info"] = client.get(f"/sessions/{sid}").json()
        fixtures["estimate"] = client.post(f"/sessions/{sid}/estimate").json()

        rec_resp = client.post(
            f"/sessions/{sid}/recommend",
            json={"scenarios_csv": SCENARIOS_CSV, "budget": "1000",
                  "caps": [0.6, 0.6]})
        rec_resp.raise_for_status()
        fixtures["recommendation"] = rec_resp.json()

        # a session whose contradictory answers admit no utility at all
        sid2 = client.post("/sessions", json={"quantum": 100.0}).json()["session_id"]
        flip = iter(range(10**6))
        _answer(client, sid2, 12,
                lambda q: +1 if next(flip) % 2 == 0 else -1)
        fixtures["estimate_not_rationalizable"] = \
            client.post(f"/sessions/{sid2}/estimate").json()

        # a session exhausted to the design-complete sentinel
        sid3 = client.post("/sessions",
                           json={"quantum": 25000.0, "b_bar": 100000.0}).json()[
            "session_id"]
        for _ in range(400):
            q = client.get(f"/sessions/{sid3}/query").json()
            if q.get("design_complete"):
                fixtures["design_complete"] = q
                break
            client.post(f"/sessions/{sid3}/choices",
                        json={"query_id": q["query_id"], "z": noisy_chooser(q)})

    for name, payload in fixtures.items():
        path = os.path.join(out_dir, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        print(f"wrote {path}")

    est = fixtures["estimate"]
    print(f"estimate status={est['status']} band={'yes' if est['band'] else 'no'}")
    nr = fixtures["estimate_not_rationalizable"]
    print(f"second estimate status={nr['status']}")


if __name__ == "__main__":
    main()
