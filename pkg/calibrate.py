# scratch calibration sweep; not part of the package
import itertools
import sys
import time

import numpy as np

from eqsim import metrics, model, synthgen
from eqsim.cli import _eqscore_values, eval_grids
from eqsim.configs import substream
from eqsim.losses import EqSimConfig
from eqsim.model import TrainConfig


def run(seed, mode, *, use_softmax, signal_scale, embed, lr=0.05, d=32, steps=2000):
    world = synthgen.WorldConfig(d_img=d, d_txt=d, noise_std=0.1,
                                 signal_scale=signal_scale, seed=seed)
    eq = EqSimConfig(alpha=0.04, beta=0.5, k_close=8, use_softmax=use_softmax, mode=mode)
    tc = TrainConfig(eqsim=eq, learning_rate=lr, steps=steps, batch_size=16, seed=seed,
                     d_img=d, d_txt=d, embed_dim=embed)
    stream = synthgen.generate_train_stream(world, 16, substream(seed, "batches"))
    params, hist = model.train(tc, stream)
    samples = synthgen.generate_eval_set(world, 2000, {a: 1 for a in synthgen.ASPECTS},
                                         substream(seed, "eval"))
    grids = eval_grids(params, samples)
    rep = metrics.group_metrics(grids)
    std = float(np.std(_eqscore_values(grids)["combined"]))
    return rep.group_score, std


def sweep(settings, seeds):
    for use_softmax, scale, embed, lr in settings:
        rows = []
        for seed in seeds:
            g0, s0 = run(seed, "off", use_softmax=use_softmax, signal_scale=scale, embed=embed, lr=lr)
            g1, s1 = run(seed, "hybrid", use_softmax=use_softmax, signal_scale=scale, embed=embed, lr=lr)
            rows.append((g0, g1, s0, s1))
        g0m = np.mean([r[0] for r in rows]); g1m = np.mean([r[1] for r in rows])
        std_ok = all(r[3] < r[2] for r in rows)
        print(f"softmax={use_softmax!s:5s} scale={scale:<5} embed={embed:<3} lr={lr:<5} | "
              f"off={g0m:.4f} hybrid={g1m:.4f} gap={g1m-g0m:+.4f} | std_lower_all={std_ok} "
              f"| stds off={[f'{r[2]:.3f}' for r in rows]} hyb={[f'{r[3]:.3f}' for r in rows]}",
              flush=True)


if __name__ == "__main__":
    t0 = time.perf_counter()
    settings = [
        (False, 0.33, 16, 0.05),
        (False, 0.33, 8, 0.05),
        (False, 0.5, 8, 0.05),
        (False, 0.25, 16, 0.05),
        (True, 0.33, 16, 0.05),
        (True, 0.33, 8, 0.05),
    ]
    sweep(settings, seeds=range(2))
    print(f"total {time.perf_counter() - t0:.1f}s")
