"""The sigmoid shifting schedule, step by step.

The schedule eta_t controls what fraction of the LR residual has been
injected into the image by step t.  Raw mode evaluates the logistic
curve directly; normalized mode rescales it so the chain starts exactly
at the HR image (eta_0 = 0) and ends exactly at the LR image
(eta_T = 1), which the reverse sampler requires.
"""

import numpy as np

import pixelboost as pb

T = 15
raw = pb.build_schedule(T, t_mid=8, mode="raw")
norm = pb.build_schedule(T)  # normalized is the default

print(f"{'t':>3} {'raw eta':>20} {'normalized eta':>20} {'alpha':>20}")
for t in range(T + 1):
    alpha = f"{norm.alphas[t - 1]:.16f}" if t >= 1 else "-"
    print(f"{t:>3} {raw.etas[t]:>20.16f} {norm.etas[t]:>20.16f} {alpha:>20}")

# The midpoint of the logistic curve is exact, not approximate.
print(f"\nraw eta at t_mid=8: {float(raw.etas[8])!r}")

# Per-step drifts are differences of the sequence, so they telescope:
# summing every alpha reproduces the total injected fraction.
total = float(np.sum(norm.alphas))
print(f"sum of normalized alphas: {total!r} (eta_T - eta_0 = "
      f"{float(norm.etas[-1] - norm.etas[0])!r})")

# Moving t_mid shifts where the injection is fastest.
for t_mid in (4.0, 8.0, 12.0):
    sched = pb.build_schedule(T, t_mid=t_mid)
    peak = int(np.argmax(sched.alphas)) + 1
    print(f"t_mid={t_mid:>4}: largest single-step injection at t={peak}")
