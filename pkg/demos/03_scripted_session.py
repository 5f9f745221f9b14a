"""Replay the full assembly conversation against the simulated arm.

The scripted backend stands in for the language model, so the whole
pipeline (dialogue -> decode -> plan -> simulate -> telemetry) runs
deterministically and offline.  Run:  python demos/03_scripted_session.py
"""

from pathlib import Path

from verba_arm import Scene, ScriptedBackend, Session

ROOT = Path(__file__).resolve().parent.parent

scene = Scene.from_file(ROOT / "scenes" / "assembly.json")
backend = ScriptedBackend.from_file(ROOT / "fixtures" / "assembly_replies.txt")
session = Session("demo", scene, backend)
session.start()

OPERATOR = [
    "hello let's start the assembly",
    "give me the school",        # speech-to-text garbled "screw"
    "get closer to me",
    "closer",
    "good hand it over",
    "now I want to assemble the plate",
    "give me at the same location as before",
    "give me a jeweler",         # and "driller"
    "finished now take it back",
    "drill",
]

for line in OPERATOR:
    outcome = session.handle_utterance(line)
    print(f"operator : {line}")
    print(f"assistant: {outcome.reply_text}")
    if outcome.kind == "commands":
        print(f"           executed in {session.sim_t:.2f}s total sim time "
              f"({outcome.exec_status})")
    print()

session.mark_task_complete()
session.end()

print("final workspace:")
for obj in scene.to_payload()["objects"]:
    print(f"  {obj['name']:6s} at ({obj['x']:+.3f}, {obj['y']:+.3f}, {obj['z']:+.3f})")
print(f"\nremembered delivery spot: {session.dialogue.memory.last_delivery}")
