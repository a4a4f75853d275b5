import time
import warnings

warnings.filterwarnings("ignore")
import numpy as np

from svarma_whf.densities import sgt
from svarma_whf.estimate import OptimSchedule, StageSettings
from svarma_whf.model import SvarmaSpec, pack, simulate
from svarma_whf.select import grid
from svarma_whf.whf import PartialIndices

spec = SvarmaSpec(2, 1, 1, PartialIndices(0, 1, 2), "natural",
                  (sgt(0.5, 2, 10), sgt(0.5, 2, 10)))
theta_true = pack([[[0.5, 0.1], [-0.2, 0.4]]],
                  [[[1, 0], [0.3, 1]], [[0, 0], [0, 0.4]]],
                  [[[0.35, 0.6], [0, 1]], [[1, 0], [0, 0]]],
                  [[1, 2.0], [-0.6, 1]], [1.0, 0.8],
                  [(0.5, 2, 10), (0.5, 2, 10)], spec)

# invertible twin: same orders, (kappa, k) = (0, 0)
spec_inv = SvarmaSpec(2, 1, 1, PartialIndices(0, 0, 2), "natural",
                      (sgt(0.5, 2, 10), sgt(0.5, 2, 10)))
theta_inv = pack([[[0.5, 0.1], [-0.2, 0.4]]],
                 [[[1, 0], [0, 1]], [[0.35, 0.2], [0.1, 0.4]]],
                 [[[1, 0], [0, 1]], [[0, 0], [0, 0]]],
                 [[1, 2.0], [-0.6, 1]], [1.0, 0.8],
                 [(0.5, 2, 10), (0.5, 2, 10)], spec_inv)

sched = OptimSchedule(
    multistart=1,
    stages=("gaussian", "laplace", "sgt"),
    settings=StageSettings(max_iter=150, simplex_max_iter=40, tol=1e-8,
                           rounds=1),
)
dens = (sgt(0.5, 2, 10), sgt(0.5, 2, 10))

t0 = time.time()
hits = 0
for seed in range(4):
    ds, _ = simulate(theta_true, T=5000, burn_in=500, seed=2000 + seed)
    g = grid(ds, 1, 1, schedule=sched, densities=dens, seed=seed * 100, jobs=2)
    b = g.best()
    ok = (b.p, b.q, b.kappa, b.k) == (1, 1, 0, 1)
    hits += ok
    print(f"noninv seed {seed}: best=({b.p},{b.q},{b.kappa},{b.k}) ok={ok} "
          f"t={time.time()-t0:.0f}s", flush=True)
    for r in sorted(g.rows, key=lambda r: r.bic)[:4]:
        print(f"   ({r.p},{r.q},{r.kappa},{r.k}) bic={r.bic:.1f} L={r.loglik:.5f} {r.status[:30]}")
hits_inv = 0
for seed in range(4):
    ds, _ = simulate(theta_inv, T=5000, burn_in=500, seed=3000 + seed)
    g = grid(ds, 1, 1, schedule=sched, densities=dens, seed=seed * 100, jobs=2)
    b = g.best()
    ok = (b.kappa, b.k) == (0, 0)
    hits_inv += ok
    print(f"inv    seed {seed}: best=({b.p},{b.q},{b.kappa},{b.k}) ok={ok} "
          f"t={time.time()-t0:.0f}s", flush=True)
print(f"noninv hits {hits}/4, inv hits {hits_inv}/4, total {time.time()-t0:.0f}s")
