"""Scratch: is the high-order-boosted model more PGD-vulnerable?"""
import sys
import time

import numpy as np

from multiorder.attack import AttackConfig, adversarial_accuracy
from multiorder.data import gen_tabular
from multiorder.nn import MLP8_HIDDEN, TrainConfig, config_for_type, train

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 30

data = gen_tabular(n=12, n_classes=2, samples=4000, seed=seed)
base = TrainConfig(epochs=epochs, seed=seed, learning_rate=0.03)

for hidden, name in ((base.hidden_dims, "mlp5"), (MLP8_HIDDEN, "mlp8")):
    models = {}
    for kind in ("normal", "high-order-robustness"):
        cfg = config_for_type(kind, base=base, hidden_dims=hidden)
        t0 = time.time()
        res = train(cfg, data)
        models[kind] = (res.model, res.history[-1]["test_accuracy"], time.time() - t0)
    for eps, steps in ((0.6, 100), (0.2, 50)):
        cfgatk = AttackConfig(epsilon=eps, steps=steps, step_size=0.01)
        row = []
        for kind, (model, acc, tt) in models.items():
            clean, adv = adversarial_accuracy(model, data.test_features, data.test_labels, cfgatk)
            row.append((kind, acc, clean, adv))
        n_adv, h_adv = row[0][3], row[1][3]
        print(f"{name} eps={eps} steps={steps}: "
              + "  ".join(f"{k}: clean={c:.3f} adv={a:.3f}" for k, _, c, a in row)
              + f"  -> {'PASS' if h_adv < n_adv else 'FAIL'}")
