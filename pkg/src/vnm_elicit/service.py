"""
Session-based HTTP API for live elicitation: serves multi-round queries,
records choices, runs the MLE, and returns estimates, bounds, and portfolio
recommendations.  Sessions persist as append-only JSON event logs.

Payload conventions: money as decimal strings, probabilities as decimals
with at most 12 fractional digits.
"""

from __future__ import annotations

import json
import math
import os
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .bounds import default_lambda, info_matrix, theoretical_bounds
from .core import (BreakpointGrid, ComparisonRecord, Lottery, PiecewiseUtility,
                   StructureKind, StructureLevel, build_grid)
from .decide import PortfolioProblem, equivalence_check, optimize_portfolio
from .design import DesignComplete, DesignState, multi_round_step
from .mle import MleStatus, make_problem, solve_mle
from .simulate import gumbel_quantile


def money_str(v: float) -> str:
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return s if s else "0"


def prob_val(p: float) -> float:
    return round(p, 12)


def lottery_payload(lot: Lottery) -> dict:
    return {"outcomes": [{"payoff": money_str(v), "prob": prob_val(p)}
                         for v, p in lot.outcomes]}


class SessionConfig(BaseModel):
    L: float = 10.0
    c_bar: float = 100.0
    b_bar: float = 100000.0
    delta: float = Field(0.05, gt=0.0, lt=1.0)
    structure: str = "full"
    quantum: float = 1.0

    def structure_level(self) -> StructureLevel:
        return StructureLevel(StructureKind(self.structure), self.L, self.c_bar)


class ChoiceBody(BaseModel):
    query_id: str
    z: int


class RecommendBody(BaseModel):
    scenarios_csv: str
    budget: str
    caps: list[float]
    delta: Optional[float] = None


@dataclass
class Session:
    id: str
    config: SessionConfig
    state: DesignState
    issued: list[dict] = field(default_factory=list)   # {id, round, w, y}
    answers: dict[str, int] = field(default_factory=dict)
    last_estimate: Optional[dict] = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def status(self) -> str:
        return "Estimated" if self.last_estimate is not None else "Collecting"

    def answered_records(self) -> list[ComparisonRecord]:
        return [ComparisonRecord(q["w"], q["y"], self.answers[q["id"]])
                for q in self.issued if q["id"] in self.answers]

    def issue_round(self) -> None:
        round_no = self.state.round_index + 1
        queries, _ = multi_round_step(self.state)
        for w, y in queries:
            self.issued.append({"id": f"q{len(self.issued)}",
                                "round": round_no, "w": w, "y": y})


class SessionStore:
    """In-memory sessions backed by per-session JSONL event logs."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _log_path(self, session_id: str) -> str:
        return os.path.join(self.data_dir, f"{session_id}.jsonl")

    def append_event(self, session_id: str, event: dict) -> None:
        with open(self._log_path(session_id), "a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    def create(self, config: SessionConfig) -> Session:
        session_id = uuid.uuid4().hex
        grid = BreakpointGrid([0.0, config.b_bar], config.b_bar)
        state = DesignState(grid=grid, quantum=config.quantum)
        session = Session(id=session_id, config=config, state=state)
        self.append_event(session_id, {"type": "created",
                                       "config": config.model_dump()})
        session.issue_round()
        self.append_event(session_id, {"type": "round",
                                       "round": session.state.round_index})
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id]
        session = self._replay(session_id)
        with self._lock:
            self._sessions.setdefault(session_id, session)
            return self._sessions[session_id]

    def _replay(self, session_id: str) -> Session:
        path = self._log_path(session_id)
        if not os.path.exists(path):
            raise HTTPException(status_code=404, detail="unknown session")
        session: Optional[Session] = None
        with open(path) as fh:
            for line in fh:
                event = json.loads(line)
                kind = event["type"]
                if kind == "created":
                    config = SessionConfig(**event["config"])
                    grid = BreakpointGrid([0.0, config.b_bar], config.b_bar)
                    session = Session(id=session_id, config=config,
                                      state=DesignState(
                                          grid=grid, quantum=config.quantum))
                elif kind == "round":
                    session.issue_round()
                elif kind == "choice":
                    session.answers[event["query_id"]] = int(event["z"])
                # estimate/recommend events are derived data; recomputed on demand
        if session is None:
            raise HTTPException(status_code=500, detail="corrupt event log")
        return session


def _query_payload(session: Session, q: dict) -> dict:
    return {"query_id": q["id"], "round": q["round"],
            "w": lottery_payload(q["w"]), "y": lottery_payload(q["y"])}


def _estimate_payload(session: Session) -> dict:
    records = session.answered_records()
    if not records:
        raise HTTPException(status_code=409, detail="no answered queries yet")
    config = session.config
    grid = build_grid(records, config.b_bar, quantum=config.quantum)
    structure = config.structure_level()
    solution = solve_mle(make_problem(records, grid, structure))
    info = info_matrix(records, grid)
    lam = default_lambda(info)
    bounds = theoretical_bounds(info, grid.n, len(records), config.delta, lam,
                                config.c_bar, config.L, grid.mesh)
    payload = solution.to_json()
    payload["grid"] = [money_str(p) for p in grid.points]
    payload["bounds"] = bounds.to_json()
    payload["answered"] = len(records)
    payload["band"] = _band_payload(solution, grid)
    return payload


def _band_payload(solution, grid: BreakpointGrid) -> Optional[dict]:
    """Pointwise envelope of utilities consistent with the solve, sampled at
    the breakpoints and segment midpoints (where the band is widest); None
    when the solve does not pin down a unique utility."""
    if solution.status is not MleStatus.UNIQUE or solution.utility is None \
            or solution.utility.structure is None \
            or not solution.utility.structure.concave:
        return None
    from .core import eval_utility
    from .mle import optimal_set_band
    band = optimal_set_band(solution)
    pts = np.sort(np.concatenate(
        [grid.points, (grid.points[:-1] + grid.points[1:]) / 2.0]))
    return {"y": [money_str(p) for p in pts],
            "lower": [float(v) for v in eval_utility(solution.utility, pts)],
            "upper": [float(v) for v in band.upper(pts)]}


def create_app(data_dir: str = "./sessions") -> FastAPI:
    app = FastAPI(title="utility elicitation service")
    store = SessionStore(data_dir)
    app.state.store = store

    @app.post("/sessions", status_code=201)
    def create_session(config: SessionConfig):
        try:
            config.structure_level()
            BreakpointGrid([0.0, config.b_bar], config.b_bar)
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err))
        session = store.create(config)
        return {"session_id": session.id, "status": session.status,
                "config": config.model_dump()}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return {
                "session_id": session.id,
                "status": session.status,
                "config": session.config.model_dump(),
                "round": session.state.round_index,
                "n_breakpoints": session.state.grid.n,
                "grid": [money_str(p) for p in session.state.grid.points],
                "issued": len(session.issued),
                "answered": len(session.answers),
            }

    @app.get("/sessions/{session_id}/query")
    def next_query(session_id: str):
        session = store.get(session_id)
        with session.lock:
            for q in session.issued:
                if q["id"] not in session.answers:
                    return _query_payload(session, q)
            try:
                session.issue_round()
            except DesignComplete:
                return {"design_complete": True}
            store.append_event(session_id, {"type": "round",
                                            "round": session.state.round_index})
            for q in session.issued:
                if q["id"] not in session.answers:
                    return _query_payload(session, q)
            raise HTTPException(status_code=500, detail="round issued no queries")

    @app.post("/sessions/{session_id}/choices")
    def submit_choice(session_id: str, body: ChoiceBody):
        if body.z not in (+1, -1):
            raise HTTPException(status_code=422, detail="z must be +1 or -1")
        session = store.get(session_id)
        with session.lock:
            known = {q["id"] for q in session.issued}
            if body.query_id not in known:
                raise HTTPException(status_code=404, detail="unknown query")
            prior = session.answers.get(body.query_id)
            if prior is not None:
                if prior != body.z:
                    raise HTTPException(status_code=409,
                                        detail="query already answered differently")
                return {"answered": len(session.answers), "duplicate": True}
            session.answers[body.query_id] = body.z
            store.append_event(session_id, {"type": "choice",
                                            "query_id": body.query_id,
                                            "z": body.z})
            return {"answered": len(session.answers), "duplicate": False}

    @app.post("/sessions/{session_id}/estimate")
    def estimate(session_id: str):
        session = store.get(session_id)
        with session.lock:
            payload = _estimate_payload(session)
            session.last_estimate = payload
            store.append_event(session_id, {"type": "estimate",
                                            "answered": payload["answered"]})
            return payload

    @app.post("/sessions/{session_id}/recommend")
    def recommend(session_id: str, body: RecommendBody):
        session = store.get(session_id)
        with session.lock:
            if session.last_estimate is None:
                raise HTTPException(status_code=409,
                                    detail="estimate the utility first")
            est = session.last_estimate
            if est["status"] not in (MleStatus.UNIQUE.value,
                                     MleStatus.SEPARATION_AT_BOUND.value):
                raise HTTPException(
                    status_code=409,
                    detail="no utility available (choices not rationalizable); "
                           "collect more informative queries and re-estimate")
            try:
                scenarios = _parse_scenarios_csv(body.scenarios_csv)
                utility = PiecewiseUtility.from_json(est["utility"])
                problem = PortfolioProblem(
                    scenarios=scenarios, budget=float(body.budget),
                    caps=np.asarray(body.caps, dtype=np.float64),
                    utility=utility)
            except ValueError as err:
                raise HTTPException(status_code=422, detail=str(err))
            delta = body.delta if body.delta is not None else session.config.delta
            sigma = est["sigma_hat"]
            report = equivalence_check(problem, delta, sigma)
            payload = {
                "allocation": [money_str(v) for v in report.x_star],
                "eu_value": report.eu_value,
                "par_value": report.par_value,
                "prar_value": report.prar_value,
                "offset": report.offset,
                "equivalence_holds": report.consistent,
            }
            store.append_event(session_id, {"type": "recommend",
                                            "budget": body.budget,
                                            "caps": body.caps})
            return payload

    return app


def _parse_scenarios_csv(text: str) -> np.ndarray:
    import csv as _csv
    import io as _io
    reader = _csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV")
    expected = [f"asset_{i}" for i in range(len(header))]
    if header != expected:
        raise ValueError(f"header must be {','.join(expected)}")
    rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValueError("no scenario rows")
    return np.asarray(rows, dtype=np.float64)
