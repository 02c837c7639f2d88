"""Why a fixed-weight blend of two stabilizing gains can explode.

For any stabilizing K1 and blend weight in (0, 1) there is a partner
gain K2 -- itself stabilizing -- whose fixed blend is unstable.  This
script builds the certificate for an LQR-designed K1, prints the three
spectral radii, and simulates the blown-up blend next to the perfectly
stable partner gain.
"""

import numpy as np

import lqshield as lq

np.set_printoptions(precision=4, suppress=True)

rng = np.random.default_rng(3)
A = rng.standard_normal((3, 3)) * 0.5
B = np.eye(3) + 0.1 * rng.standard_normal((3, 3))
model = lq.LinearModel(A=A, B=B, Q=np.eye(3), R=np.eye(3))
syn = lq.synthesize(model)

cert = lq.construct_adversarial_K2(model, syn.K, lam=0.5)
print(cert.summary_text())

x0 = np.array([1.0, 0.0, 0.0])
blended, alone = lq.demonstrate_instability(cert, x0, T=40)
print("\n||x_t|| under the blended gain vs the partner gain alone:")
for t in range(0, alone.states.shape[0], 5):
    nb = (
        f"{np.linalg.norm(blended.states[t]):12.4g}"
        if t < blended.states.shape[0]
        else "   (blew up)"
    )
    print(f"  t={t:3d}  blended {nb}   partner {np.linalg.norm(alone.states[t]):12.4g}")
if blended.diverged:
    print(f"blended rollout crossed the blow-up bound at step {blended.diverged_at}")
print(f"partner gain alone ends at ||x|| = {np.linalg.norm(alone.states[-1]):.3g}")

# the same machinery refuses the one shape it cannot handle
try:
    scaled = lq.LinearModel(A=0.5 * np.eye(2), B=np.eye(2), Q=np.eye(2), R=np.eye(2))
    lq.construct_adversarial_K2(scaled, lq.synthesize(scaled).K, 0.5)
except lq.NotApplicable as exc:
    print(f"\nidentity-multiple closed loop: NotApplicable ({exc})")
