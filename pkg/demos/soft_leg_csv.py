"""Soft-leg style workflow: a logged CSV in, a predictive model out.

Hardware logs from the soft leg are not available, so a synthetic tip
model stands in. The log has an input on every row and 0.5 mm of
position noise, as a motion-capture recording would. The pipeline is the
same one a real log would go through: ingest, smooth with a 5-sample
moving average, fit on R^2, predict held-out runs.
"""
import tempfile
from pathlib import Path

import numpy as np

from koopman_lift import systems
from koopman_lift.data import ingest_csv, moving_average
from koopman_lift.edmd import fit_acd
from koopman_lift.predict import mse, rollout

leg = systems.soft_leg_system()
protocol = systems.SimProtocol(20, 4.0, 0.02, (0.0, 0.0), (6.0, 6.0), seed=3, hold=25)
rng = np.random.default_rng(0)

with tempfile.TemporaryDirectory() as tmp:
    log = Path(tmp) / "leg_log.csv"
    rows = ["traj_id,t,y,z,u_1,u_2"]
    for k in range(protocol.n_trajectories):
        u = systems.random_inputs(protocol, k)
        x = leg.simulate(u, dt=protocol.dt) + 5e-4 * rng.standard_normal((len(u) + 1, 2))
        for i, (xi, ui) in enumerate(zip(x, np.vstack([u, u[-1:]]))):
            rows.append(",".join(map(repr, [k, i * protocol.dt, *map(float, xi), *map(float, ui)])))
    log.write_text("\n".join(rows) + "\n")
    print(f"wrote {len(rows) - 1} log rows to {log.name}")
    data = ingest_csv(log)

print(f"ingested {len(data)} trajectories, dt = {data.dt:.3f} s, inputs per trajectory = {len(data.trajectories[0].inputs)}")
model = fit_acd(moving_average(data, 5), "R^2")
print(f"fitted K with shape {model.K.shape}")

errs = []
for k in range(10):
    u = systems.random_inputs(protocol, 500 + k, 100)
    truth = leg.simulate(u, dt=protocol.dt)
    errs.append(mse(rollout(model, truth[0], u).states, truth) * 1e6)
print("held-out MSE [mm^2]  y: %.3f  z: %.3f" % tuple(np.mean(errs, axis=0)))
