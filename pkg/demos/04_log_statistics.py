"""Batch statistics over a pool of session logs.

Builds sixteen synthetic sessions (eight per condition, paired), scores the
pool, gates each condition with the Anderson-Darling normality test and runs
the paired t test across conditions.  Run:  python demos/04_log_statistics.py
"""

import tempfile
from pathlib import Path

import numpy as np

from verba_arm.analysis import analyze_logs
from verba_arm.bus import Envelope, encode_envelope

rng = np.random.default_rng(12345)
workdir = Path(tempfile.mkdtemp(prefix="arm-stats-"))

paths = []
for i in range(8):
    # the guided condition is systematically faster, with per-subject noise
    fixed_s = rng.normal(190.0, 18.0)
    guided_s = fixed_s - rng.normal(45.0, 8.0)
    for session_id, condition, seconds in (
        (f"fixed-{i}", "fixed", fixed_s),
        (f"assistant-{i}", "assistant", guided_s),
    ):
        path = workdir / f"{session_id}.jsonl"
        start = {"event": "start", "session_id": session_id,
                 "condition": condition, "pair": f"subject-{i}"}
        envelopes = [
            Envelope("session/event", 1, 0, start),
            Envelope("session/event", 2, int(seconds * 1000), {"event": "task_complete"}),
            Envelope("session/event", 3, int(seconds * 1000) + 3, {"event": "end"}),
        ]
        path.write_text("".join(encode_envelope(e) + "\n" for e in envelopes))
        paths.append(path)

report = analyze_logs(paths)
print(report.to_text())
