"""Walk through the command grammar: decoding, rendering, rejection.

Run:  python demos/01_command_grammar.py
"""

from verba_arm import (
    CartesianTarget,
    Commands,
    Conversation,
    Move,
    decode_reply,
    render_command,
)
from verba_arm.commands import CommandError

REPLIES = [
    "Grab [screw]",
    "Grab [drill] Move [0.2,0,1] Drop [drill]",
    "Sure! Grab [plate] coming right up.",
    "Okay, what do you want me to grab first?",
    "Move [back]",
    "Move [0.2,0]",
    "",
]

print("assistant reply -> decoder verdict")
print("-" * 60)
for reply in REPLIES:
    try:
        decoded = decode_reply(reply)
    except CommandError as exc:
        print(f"{reply!r:55s} REJECTED: {exc}")
        continue
    if isinstance(decoded, Commands):
        rendered = " ".join(render_command(c) for c in decoded.sequence)
        print(f"{reply!r:55s} -> run: {rendered}")
    elif isinstance(decoded, Conversation):
        print(f"{reply!r:55s} -> relay to operator")

print()
print("round trip: every command survives render -> decode unchanged")
cmd = Move(CartesianTarget(0.25, -0.1, 0.96))
text = render_command(cmd)
back = decode_reply(text)
print(f"  {cmd} -> {text!r} -> {back.sequence[0]}")
assert back.sequence == (cmd,)
