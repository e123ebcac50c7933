"""Scratch: do the band losses move interaction mass as expected?"""
import sys
import time

import numpy as np

from multiorder.data import gen_tabular
from multiorder.games import MaskedModelGame
from multiorder.nn import TrainConfig, config_for_type, train
from multiorder.sampling import PlanConfig, build_plan, strength_profile

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 30

data = gen_tabular(n=12, n_classes=2, samples=4000, seed=seed)
base = TrainConfig(epochs=epochs, seed=seed, learning_rate=0.03)

profiles = {}
for kind in ("normal", "middle-order", "high-order", "low-order"):
    t0 = time.time()
    cfg = config_for_type(kind, base=base)
    res = train(cfg, data)
    model = res.model
    x_test, y_test = data.test_features, data.test_labels
    correct = np.flatnonzero(model.predict(x_test) == y_test)[:100]
    games = [
        MaskedModelGame(model, x_test[i], data.baseline, int(y_test[i]))
        for i in correct
    ]
    plan = build_plan(PlanConfig(n=12, num_samples=len(games), contexts=100), seed=seed)
    prof = strength_profile(games, plan)
    profiles[kind] = prof
    acc = res.history[-1]["test_accuracy"]
    print(f"{kind:22s} acc={acc:.3f}  t={time.time()-t0:.1f}s  J={np.array2string(prof.J, precision=2, suppress_small=True)}")

pn = profiles["normal"]
pm = profiles["middle-order"]
ph = profiles["high-order"]
pl = profiles["low-order"]
print()
print(f"middle band [0.3,0.7]: middle={pm.band_sum(0.3,0.7):.3f} vs normal={pn.band_sum(0.3,0.7):.3f}  -> {'PASS' if pm.band_sum(0.3,0.7)>pn.band_sum(0.3,0.7) else 'FAIL'}")
print(f"low band [0,0.5]:      high  ={ph.band_sum(0.0,0.5):.3f} vs normal={pn.band_sum(0.0,0.5):.3f}  -> {'PASS' if ph.band_sum(0.0,0.5)<pn.band_sum(0.0,0.5) else 'FAIL'}")
print(f"high band [0.7,1.0]:   low   ={pl.band_sum(0.7,1.0):.3f} vs normal={pn.band_sum(0.7,1.0):.3f}  -> {'PASS' if pl.band_sum(0.7,1.0)<pn.band_sum(0.7,1.0) else 'FAIL'}")
