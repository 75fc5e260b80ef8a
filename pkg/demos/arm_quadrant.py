"""Two-link arm: sweep a quadrant under constant shoulder torque.

The arm starts horizontal and at rest. A torque of -1 N m on the first
joint drops it until the first link points straight down. The state
lives on S^1 x S^1 x R^2 (two joint angles plus two joint rates).
"""
import numpy as np

from koopman_lift import systems
from koopman_lift.evaluation import quadrant_inputs, rollout_mse, train

arm = systems.arm_system()
data = systems.generate_dataset(arm, systems.arm_protocol(0))
u = quadrant_inputs(arm)
print(f"{len(data)} training trajectories; quadrant test lasts {len(u)} steps ({len(u) * 0.01:.2f} s)")

for method in ("acd", "hermite"):
    model = train(method, data)
    err = rollout_mse(model, arm, u, 0.01)
    print(f"{method:<8} N={model.model.K.shape[0]:>3}  MSE theta1 {err[0]:.3g}  theta2 {err[1]:.3g}")

acd = train("acd", data)
pred = acd.predict(arm.x0, u)
truth = arm.simulate(u, dt=0.01)
print("\nfinal joint angles [rad]")
print("  truth     ", truth[-1, :2].round(4))
print("  predicted ", pred[-1, :2].round(4))
print("  target     theta1 = -pi/2 =", round(-np.pi / 2, 4))
