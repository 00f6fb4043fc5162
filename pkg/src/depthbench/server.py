"""Phased challenge service over HTTP.

Two phase flavors with different leaderboard privacy: the development phase
shows a public board with anonymized team names (the requester sees their own
row de-anonymized); the final phase is fully private, participants only see
receipt status of their own submissions while operators see everything.

Persistence is an append-only JSONL event log plus the raw archives; all
state is rebuilt by replaying the log, so a restart re-queues anything that
never finished evaluating and never loses a finished report.
"""

# no `from __future__ import annotations` here: FastAPI needs the endpoint
# annotations resolvable at runtime.

import json
import secrets
import threading
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .core import EvalConfig, validate_config
from .dataset import (
    FrameRecord,
    _read_archive_files,
    load_manifest,
    load_submission,
    parse_submission_meta,
)
from .errors import (
    BadArchive,
    BadMeta,
    DepthbenchError,
    Forbidden,
    NotFound,
    PhaseClosed,
    RateLimited,
    UnknownPhase,
)
from .evaluation import AggregateReport, evaluate_submission, rank, report_from_dict, report_to_dict

DEVELOPMENT = "development"
FINAL = "final"

# Leaderboard visibility is a function of the phase flavor, by design.
PHASE_VISIBILITY = {
    DEVELOPMENT: "public_anonymized",
    FINAL: "private",
}


def _parse_ts(text: str) -> datetime:
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


@dataclass(frozen=True)
class PhaseConfig:
    name: str
    open_from: datetime
    open_until: datetime
    manifest_path: Path

    def __post_init__(self):
        if self.name not in PHASE_VISIBILITY:
            raise ValueError(f"phase name must be one of {sorted(PHASE_VISIBILITY)}")
        if not self.open_from < self.open_until:
            raise ValueError("phase must open before it closes")

    @property
    def visibility(self) -> str:
        return PHASE_VISIBILITY[self.name]


@dataclass(frozen=True)
class ServerConfig:
    data_dir: Path
    phases: dict
    team_tokens: dict          # token -> team
    operator_tokens: frozenset
    daily_cap: int = 5
    workers: int = 1
    default_alignment: str = "lse"
    eval_config: EvalConfig = field(default_factory=EvalConfig)

    @classmethod
    def from_file(cls, path) -> "ServerConfig":
        path = Path(path)
        doc = json.loads(path.read_text())
        base = path.parent
        phases = {}
        for p in doc["phases"]:
            phase = PhaseConfig(
                name=p["name"],
                open_from=_parse_ts(p["open_from"]),
                open_until=_parse_ts(p["open_until"]),
                manifest_path=(base / p["manifest"]).resolve(),
            )
            phases[phase.name] = phase
        eval_config = EvalConfig.from_dict(doc.get("eval_config", {}))
        validate_config(eval_config)
        return cls(
            data_dir=(base / doc["data_dir"]).resolve(),
            phases=phases,
            team_tokens={token: team for team, token in doc["teams"].items()},
            operator_tokens=frozenset(doc.get("operators", [])),
            daily_cap=int(doc.get("daily_cap", 5)),
            workers=int(doc.get("workers", 1)),
            default_alignment=doc.get("default_alignment", "lse"),
            eval_config=eval_config,
        )


@dataclass
class StoredSubmission:
    id: str
    team: str
    phase: str
    received_at: str
    alignment: str | None
    archive_path: Path
    status: str = "queued"          # queued | evaluated | failed
    report: AggregateReport | None = None
    failure_reason: str | None = None


class ChallengeService:
    """State machine behind the HTTP API; usable directly in tests."""

    def __init__(self, config: ServerConfig, clock=None):
        self.config = config
        self._clock = clock or (lambda: datetime.now(timezone.utc))
        self._lock = threading.RLock()
        self._queue: deque[str] = deque()
        self._queue_ready = threading.Condition(self._lock)
        self._stop = threading.Event()
        self._worker: threading.Thread | None = None

        self.config.data_dir.mkdir(parents=True, exist_ok=True)
        self._archive_dir = self.config.data_dir / "archives"
        self._archive_dir.mkdir(exist_ok=True)
        self._log_path = self.config.data_dir / "events.jsonl"

        self._submissions: dict[str, StoredSubmission] = {}
        self._handles: dict[tuple[str, str], str] = {}
        self._manifests: dict[str, list[FrameRecord]] = {
            name: load_manifest(phase.manifest_path)
            for name, phase in self.config.phases.items()
        }
        self._replay()

    # --- persistence ---------------------------------------------------------

    def _append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, separators=(",", ":"))
        with open(self._log_path, "a") as fh:
            fh.write(line + "\n")

    def _replay(self) -> None:
        if not self._log_path.exists():
            return
        with open(self._log_path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                event = json.loads(line)
                kind = event["event"]
                if kind == "received":
                    sub = StoredSubmission(
                        id=event["id"],
                        team=event["team"],
                        phase=event["phase"],
                        received_at=event["received_at"],
                        alignment=event.get("alignment"),
                        archive_path=self.config.data_dir / event["archive"],
                    )
                    self._submissions[sub.id] = sub
                elif kind == "handle":
                    self._handles[(event["phase"], event["team"])] = event["handle"]
                elif kind == "evaluated":
                    sub = self._submissions[event["id"]]
                    sub.status = "evaluated"
                    sub.report = report_from_dict(event["report"])
                elif kind == "failed":
                    sub = self._submissions[event["id"]]
                    sub.status = "failed"
                    sub.failure_reason = event["reason"]
        # anything still queued gets evaluated again after a restart
        for sub in self._submissions.values():
            if sub.status == "queued":
                self._queue.append(sub.id)

    # --- helpers --------------------------------------------------------------

    def _phase(self, name: str) -> PhaseConfig:
        try:
            return self.config.phases[name]
        except KeyError:
            raise UnknownPhase(f"no phase named {name!r}") from None

    def _handle_for(self, phase: str, team: str) -> str:
        with self._lock:
            key = (phase, team)
            if key not in self._handles:
                taken = set(self._handles.values())
                while True:
                    handle = f"anon-{secrets.token_hex(4)}"
                    if handle not in taken:
                        break
                self._handles[key] = handle
                self._append({"event": "handle", "phase": phase, "team": team,
                              "handle": handle})
            return self._handles[key]

    def config_digest(self) -> str:
        return self.config.eval_config.digest()

    # --- API operations ---------------------------------------------------------

    def submit(self, phase_name: str, team: str, archive: bytes) -> str:
        phase = self._phase(phase_name)
        now = self._clock()
        if not phase.open_from <= now < phase.open_until:
            raise PhaseClosed(f"phase {phase_name!r} is not open at {now.isoformat()}")
        with self._lock:
            today = now.date().isoformat()
            used = sum(1 for s in self._submissions.values()
                       if s.team == team and s.phase == phase_name
                       and s.received_at[:10] == today)
            if used >= self.config.daily_cap:
                raise RateLimited(
                    f"team {team!r} reached the daily cap of {self.config.daily_cap}")
            # Cheap validation up front; full frame coverage is checked when
            # the submission is evaluated.
            files = _read_archive_files(archive)
            if "submission.json" not in files:
                raise BadMeta("archive has no submission.json")
            meta = parse_submission_meta(files["submission.json"])
            sub_id = f"s{len(self._submissions) + 1:06d}"
            archive_path = self._archive_dir / f"{sub_id}.zip"
            archive_path.write_bytes(archive)
            sub = StoredSubmission(
                id=sub_id,
                team=team,
                phase=phase_name,
                received_at=now.isoformat(),
                alignment=meta.alignment,
                archive_path=archive_path,
            )
            self._submissions[sub_id] = sub
            self._append({
                "event": "received",
                "id": sub_id,
                "team": team,
                "phase": phase_name,
                "received_at": sub.received_at,
                "archive": str(archive_path.relative_to(self.config.data_dir)),
                "alignment": meta.alignment,
            })
            self._handle_for(phase_name, team)
            self._queue.append(sub_id)
            self._queue_ready.notify()
        return sub_id

    def evaluate_archive(self, sub: StoredSubmission) -> AggregateReport:
        """Deterministic evaluation of a stored archive."""
        manifest = self._manifests[sub.phase]
        submission = load_submission(sub.archive_path, manifest)
        alignment = sub.alignment or self.config.default_alignment
        return evaluate_submission(manifest, submission, self.config.eval_config,
                                   alignment=alignment, workers=self.config.workers)

    def _evaluate_one(self, sub_id: str) -> None:
        sub = self._submissions[sub_id]
        try:
            report = self.evaluate_archive(sub)
        except DepthbenchError as exc:
            with self._lock:
                sub.status = "failed"
                sub.failure_reason = f"{type(exc).__name__}: {exc}"
                self._append({"event": "failed", "id": sub_id,
                              "finished_at": self._clock().isoformat(),
                              "reason": sub.failure_reason})
            return
        with self._lock:
            sub.status = "evaluated"
            sub.report = report
            self._append({"event": "evaluated", "id": sub_id,
                          "finished_at": self._clock().isoformat(),
                          "report": report_to_dict(report)})

    def process_pending(self) -> int:
        """Evaluate every queued submission now (synchronous); returns the count."""
        done = 0
        while True:
            with self._lock:
                if not self._queue:
                    return done
                sub_id = self._queue.popleft()
            self._evaluate_one(sub_id)
            done += 1

    # --- background worker -----------------------------------------------------

    def start_worker(self) -> None:
        if self._worker is not None:
            return
        self._stop.clear()
        self._worker = threading.Thread(target=self._worker_loop, daemon=True)
        self._worker.start()

    def stop_worker(self) -> None:
        self._stop.set()
        with self._lock:
            self._queue_ready.notify_all()
        if self._worker is not None:
            self._worker.join(timeout=10)
            self._worker = None

    def _worker_loop(self) -> None:
        while not self._stop.is_set():
            with self._lock:
                while not self._queue and not self._stop.is_set():
                    self._queue_ready.wait(timeout=0.5)
                if self._stop.is_set():
                    return
                sub_id = self._queue.popleft()
            self._evaluate_one(sub_id)

    # --- views -------------------------------------------------------------------

    @staticmethod
    def _board_key(report: AggregateReport):
        f = report.overall.means.get("f_score")
        a = report.overall.means.get("absrel")
        return (f is not None, f if f is not None else 0.0,
                a is None, -(a if a is not None else 0.0))

    def _best_per_team(self, phase_name: str) -> list[tuple[str, AggregateReport]]:
        """A team's board entry is its best evaluated submission in the phase."""
        best: dict[str, AggregateReport] = {}
        for sub in self._submissions.values():
            if sub.phase != phase_name or sub.status != "evaluated":
                continue
            prev = best.get(sub.team)
            if prev is None or self._board_key(sub.report) > self._board_key(prev):
                best[sub.team] = sub.report
        return sorted(best.items())

    def leaderboard(self, phase_name: str, team: str | None = None,
                    operator: bool = False) -> dict:
        phase = self._phase(phase_name)
        base = {"phase": phase.name, "visibility": phase.visibility,
                "config_digest": self.config_digest()}
        if phase.name == FINAL and not operator:
            own = [
                {"id": s.id, "received_at": s.received_at, "status": s.status}
                for s in sorted(self._submissions.values(), key=lambda s: s.id)
                if s.phase == phase_name and team is not None and s.team == team
            ]
            base["submissions"] = own
            base["note"] = "final-phase scores are private until the challenge closes"
            return base
        entries = self._best_per_team(phase_name)
        rows = []
        if entries:
            for row in rank(entries):
                anonymize = phase.name == DEVELOPMENT and not operator and row.team != team
                rows.append({
                    "rank": row.rank,
                    "team": self._handle_for(phase_name, row.team) if anonymize else row.team,
                    "is_you": (row.team == team) if team is not None else False,
                    "f_score": row.f_score,
                    "absrel": row.absrel,
                    "metrics": row.metrics,
                })
        base["rows"] = rows
        return base

    def submission_status(self, sub_id: str, team: str | None = None,
                          operator: bool = False) -> dict:
        sub = self._submissions.get(sub_id)
        if sub is None:
            raise NotFound(f"no submission {sub_id!r}")
        if not operator and sub.team != team:
            raise Forbidden("only the owning team can see a submission")
        out = {
            "id": sub.id,
            "phase": sub.phase,
            "team": sub.team if (operator or sub.team == team) else None,
            "received_at": sub.received_at,
            "status": sub.status,
            "config_digest": self.config_digest(),
        }
        if sub.status == "failed" and (operator or sub.team == team):
            out["reason"] = sub.failure_reason
        show_report = sub.status == "evaluated" and (
            operator or self._phase(sub.phase).name == DEVELOPMENT)
        if show_report and sub.report is not None:
            out["report"] = report_to_dict(sub.report)
        return out


def create_app(service: ChallengeService):
    """Build the FastAPI app around a service instance."""
    from fastapi import FastAPI, File, HTTPException, Request, UploadFile
    from fastapi.responses import JSONResponse

    app = FastAPI(title="depthbench challenge service")

    def identity(request: Request) -> tuple[str | None, bool]:
        auth = request.headers.get("authorization", "")
        if not auth.lower().startswith("bearer "):
            return None, False
        token = auth[7:].strip()
        if token in service.config.operator_tokens:
            return None, True
        team = service.config.team_tokens.get(token)
        return team, False

    def require_auth(request: Request) -> tuple[str | None, bool]:
        team, operator = identity(request)
        if team is None and not operator:
            raise HTTPException(status_code=401, detail="valid bearer token required")
        return team, operator

    _STATUS = {
        UnknownPhase: 404,
        NotFound: 404,
        PhaseClosed: 403,
        Forbidden: 403,
        RateLimited: 429,
        BadArchive: 400,
        BadMeta: 400,
    }

    @app.exception_handler(DepthbenchError)
    async def depthbench_error(_request, exc: DepthbenchError):
        status = _STATUS.get(type(exc), 400)
        return JSONResponse(status_code=status,
                            content={"error": type(exc).__name__, "detail": str(exc)})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "config_digest": service.config_digest()}

    @app.post("/phases/{phase_name}/submissions", status_code=202)
    async def post_submission(phase_name: str, request: Request,
                              archive: UploadFile = File(...)):
        team, _operator = require_auth(request)
        if team is None:
            raise HTTPException(status_code=403,
                                detail="operators cannot submit; use a team token")
        payload = await archive.read()
        sub_id = service.submit(phase_name, team, payload)
        return {"id": sub_id, "status": "queued",
                "config_digest": service.config_digest()}

    @app.get("/phases/{phase_name}/leaderboard")
    def get_leaderboard(phase_name: str, request: Request):
        team, operator = identity(request)
        return service.leaderboard(phase_name, team=team, operator=operator)

    @app.get("/submissions/{sub_id}")
    def get_submission(sub_id: str, request: Request):
        team, operator = require_auth(request)
        return service.submission_status(sub_id, team=team, operator=operator)

    return app
