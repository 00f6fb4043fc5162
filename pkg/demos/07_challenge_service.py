"""The phased submission service, driven in-process.

Development phase: public leaderboard, names anonymized, your own row
de-anonymized.  Final phase: completely private; participants only see that
their submission arrived.  State is an append-only event log, so restarting
the service loses nothing.

For a real deployment: ``depthbench serve --config server.json``.
"""

import io
import json
import tempfile
import zipfile
from datetime import datetime, timedelta, timezone
from pathlib import Path

from fastapi.testclient import TestClient

from depthbench.server import ChallengeService, PhaseConfig, ServerConfig, create_app
from depthbench.synthetic import write_challenge

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    manifest, submission_dir = write_challenge(tmp / "data", n_frames=3,
                                               width=48, height=36, seed=1)
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        for p in sorted(submission_dir.iterdir()):
            zf.writestr(p.name, p.read_bytes())
    archive = buf.getvalue()

    now = datetime.now(timezone.utc)
    config = ServerConfig(
        data_dir=tmp / "state",
        phases={
            "development": PhaseConfig("development", now - timedelta(days=1),
                                       now + timedelta(days=30), manifest),
            "final": PhaseConfig("final", now - timedelta(days=1),
                                 now + timedelta(days=30), manifest),
        },
        team_tokens={"tok-ada": "ada", "tok-bob": "bob"},
        operator_tokens=frozenset({"tok-op"}),
    )
    service = ChallengeService(config)
    client = TestClient(create_app(service))

    for tok in ("tok-ada", "tok-bob"):
        for phase in ("development", "final"):
            r = client.post(f"/phases/{phase}/submissions",
                            files={"archive": ("entry.zip", archive)},
                            headers={"Authorization": f"Bearer {tok}"})
            print(f"{tok} -> {phase}: {r.json()['id']}")
    print(f"\nevaluating {service.process_pending()} queued submissions...")

    board = client.get("/phases/development/leaderboard",
                       headers={"Authorization": "Bearer tok-ada"}).json()
    print("\ndevelopment board as seen by ada:")
    for row in board["rows"]:
        tag = "(you)" if row["is_you"] else "     "
        print(f"  #{row['rank']} {row['team']:16s} {tag} F={row['f_score']:.3f}")

    final = client.get("/phases/final/leaderboard",
                       headers={"Authorization": "Bearer tok-ada"}).json()
    print("\nfinal board as seen by ada (no scores):")
    print(" ", json.dumps(final["submissions"]))

    ops = client.get("/phases/final/leaderboard",
                     headers={"Authorization": "Bearer tok-op"}).json()
    print("\nfinal board as seen by the operator:")
    for row in ops["rows"]:
        print(f"  #{row['rank']} {row['team']:8s} F={row['f_score']:.3f}")

    # Restart: a second service on the same data directory replays the log.
    reborn = ChallengeService(config)
    print(f"\nafter restart: {len(reborn._submissions)} submissions, "
          f"all status={'evaluated' if all(s.status == 'evaluated' for s in reborn._submissions.values()) else '?'}")
