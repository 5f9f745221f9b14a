"""Step the dual-stage impedance controller and compare with the closed form.

The discrete target jumps a full meter; stage one turns the jump into a
smooth interim trajectory, stage two tracks it with critically damped
impedance dynamics.  Run:  python demos/02_impedance_controller.py
"""

import numpy as np

from verba_arm import ArmController

ctrl = ArmController(start=(0, 0, 0, 0, 0, 0, 0.04))
target = ctrl.x.copy()
target[0] = 1.0
ctrl.set_target(target)

dt = 1e-3
samples = []
while not ctrl.settled(1e-3, 0.2):
    ctrl.step(dt)
    samples.append((ctrl.t, ctrl.x[0], ctrl.x_tilde_t[0]))

print(f"settled to 1 mm (held 0.2 s) after {ctrl.t:.3f} simulated seconds")
print()
print("   t      interim x~_t   position x   ascii trace")
for t, x, xt in samples[:: len(samples) // 24]:
    bar = "#" * int(round(x * 50))
    print(f"  {t:5.3f}   {xt:11.4f}   {x:10.4f}   |{bar}")

w1, w2 = 8.0, np.sqrt(400.0)
d = w2 - w1
r = -w1 * w2**2 / d**2
q = -(w2**2) / d**2 + 2 * w1 * w2**2 / d**3
tt = -(w1**2) * w2 / d**2
s = -(w1**2) / d**2 - 2 * w1**2 * w2 / d**3
ts = np.array([t for t, _, _ in samples])
xs = np.array([x for _, x, _ in samples])
oracle = 1.0 + (q + r * ts) * np.exp(-w1 * ts) + (s + tt * ts) * np.exp(-w2 * ts)

print()
print(f"max deviation from the closed-form cascade response: "
      f"{np.max(np.abs(xs - oracle)):.2e} m")
print(f"overshoot past the target: {max(0.0, xs.max() - 1.0):.2e} m")
