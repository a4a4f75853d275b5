import warnings

warnings.filterwarnings("ignore")
import time

import numpy as np

from svarma_whf.densities import sgt
from svarma_whf.estimate import OptimSchedule, StageSettings, fit, _relabel_shocks
from svarma_whf.likelihood import loglik
from svarma_whf.model import SvarmaSpec, pack, simulate, validate
from svarma_whf.whf import PartialIndices

spec = SvarmaSpec(2, 1, 1, PartialIndices(0, 1, 2), "natural",
                  (sgt(0.5, 2, 10), sgt(0.5, 2, 10)))
theta_true = pack([[[0.5, 0.1], [-0.2, 0.4]]],
                  [[[1, 0], [0.3, 1]], [[0, 0], [0, 0.4]]],
                  [[[0.35, 0.6], [0, 1]], [[1, 0], [0, 0]]],
                  [[1, 0.6], [-0.5, 1]], [1.0, 0.8],
                  [(0.5, 2, 10), (0.5, 2, 10)], spec)
rep = validate(theta_true)
print("truth valid:", rep.ok, "b roots:", np.round(rep.details["b_roots"], 3))
tt = _relabel_shocks(theta_true)
print("relabel fixed point:", np.allclose(tt.free, theta_true.free))

sched = OptimSchedule(multistart=3, perturbation=0.15,
                      settings=StageSettings(max_iter=500, simplex_max_iter=60,
                                             tol=1e-9, rounds=2))
rows, ses = [], []
t0 = time.time()
for seed in range(6):
    ds, _ = simulate(theta_true, T=5000, burn_in=500, seed=1000 + seed)
    res = fit(spec, ds, sched, seed=seed)
    dev = np.abs(res.theta_hat.free - theta_true.free) / res.stderr_free
    rows.append(res.theta_hat.free)
    ses.append(res.stderr_free)
    ltruth = loglik(theta_true, ds).value
    print(f"seed {seed}: t={time.time()-t0:.0f}s L={res.loglik:.5f} "
          f"Ltruth={ltruth:.5f} score={res.score_norm:.1e} "
          f"cover={np.mean(dev < 3):.3f} worst={np.round(np.sort(dev)[-3:], 1)}",
          flush=True)
rows, ses = np.array(rows), np.array(ses)
devs = np.abs(rows - theta_true.free) / ses
print("overall coverage:", np.mean(devs < 3))
disp = rows.std(axis=0)
print("disp/mean_se ratio:", np.round(disp / ses.mean(axis=0), 2))
