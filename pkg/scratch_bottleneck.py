"""Scratch: does the trained MLP show the U-shaped order profile?"""
import sys
import time

import numpy as np

from multiorder.data import gen_tabular, TabularSignalSpec
from multiorder.games import MaskedModelGame
from multiorder.nn import TrainConfig, train
from multiorder.sampling import PlanConfig, build_plan, strength_profile

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 30

t0 = time.time()
data = gen_tabular(n=12, n_classes=2, samples=4000, seed=seed)
print(f"dataset ref acc {data.reference_accuracy:.3f}  gen {time.time()-t0:.1f}s")

t0 = time.time()
cfg = TrainConfig(epochs=epochs, seed=seed, learning_rate=0.03)
res = train(cfg, data)
h = res.history[-1]
print(f"train {time.time()-t0:.1f}s  train_acc {h['train_accuracy']:.3f}  test_acc {h['test_accuracy']:.3f}")

model = res.model
x_test, y_test = data.test_features, data.test_labels
correct = np.flatnonzero(model.predict(x_test) == y_test)[:100]
print(f"{len(correct)} correctly classified samples")

t0 = time.time()
games = [
    MaskedModelGame(model, x_test[i], data.baseline, int(y_test[i]), output="log-odds")
    for i in correct
]
plan = build_plan(PlanConfig(n=12, num_samples=len(games), contexts=100), seed=seed)
profile = strength_profile(games, plan)
print(f"profile {time.time()-t0:.1f}s")
np.set_printoptions(precision=3, suppress=True)
print("orders:", profile.orders)
print("raw   :", profile.raw_strength)
print("J     :", profile.J)
J = profile.J
mid = 5
ok_low = J[mid] < min(J[0], J[1])
ok_high = J[mid] < min(J[9], J[10])
print(f"U-shape: J[5]={J[5]:.3f} < min(J0,J1)={min(J[0],J[1]):.3f}? {ok_low}; < min(J9,J10)={min(J[9],J[10]):.3f}? {ok_high}")
