"""Compare the numba and numpy kernel backends.

Times each recurrent kernel in isolation and one full training step
(forward, BPTT, Adam) at the default model size and at a tiny size.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from gridcast import kernels
from gridcast.network import forward_batch, init_weights
from gridcast.training import AdamState, adam_step, backward, clip_global_norm

SIZES = {"default": (16, 24, 6, 256, 128), "tiny": (16, 24, 6, 8, 4)}


def kernel_cases(impl, B, L, D, Hg, Hl, rng):
    xp = rng.normal(size=(L, B, 3 * Hg)) * 0.3
    u = rng.normal(size=(3 * Hg, Hg)) / np.sqrt(Hg)
    ut = np.ascontiguousarray(u.T)
    gru = impl.gru_forward(xp, ut)
    dh = rng.normal(size=(L, B, Hg))
    lx = rng.normal(size=(L, B, 4 * Hl)) * 0.3
    lu = rng.normal(size=(4 * Hl, Hl)) / np.sqrt(Hl)
    lut = np.ascontiguousarray(lu.T)
    lstm = impl.lstm_forward(lx, lut)
    dl = rng.normal(size=(L, B, Hl))
    p = rng.normal(size=200_000)
    g, m, v = rng.normal(size=p.size), np.zeros(p.size), np.zeros(p.size)
    return {
        "gru_forward": lambda: impl.gru_forward(xp, ut),
        "gru_backward": lambda: impl.gru_backward(dh, *gru, u),
        "lstm_forward": lambda: impl.lstm_forward(lx, lut),
        "lstm_backward": lambda: impl.lstm_backward(dl, *lstm, lu),
        "adam_update(200k)": lambda: impl.adam_update(p, g, m, v, 1e-3, 0.9, 0.999, 0.1, 0.001, 1e-8),
    }


def train_step_case(B, L, D, Hg, Hl, rng):
    w = init_weights(D, L, Hg, Hl, seed=0)
    X = rng.normal(size=(B, L, D))
    y = rng.normal(size=B)
    state = {"w": w, "opt": AdamState.zeros_like(w)}

    def step():
        yhat, cache = forward_batch(X, state["w"], train=True, rng=0)
        grads = clip_global_norm(backward(cache, y, state["w"]), 5.0)
        state["w"], state["opt"] = adam_step(state["w"], grads, state["opt"], 1e-3, inplace=True)

    return step


def best_of(fn, repeat, number):
    fn()  # warm-up (and JIT compile)
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"numpy": kernels.get_backend("numpy")}
    try:
        backends["numba"] = kernels.get_backend("numba")
    except ImportError:
        print("numba not installed; timing numpy only")
    original = {k: getattr(kernels, k) for k in kernels.KERNELS}

    for size, dims in SIZES.items():
        B, L, D, Hg, Hl = dims
        print(f"\n{size}: batch {B}, window {L}, D {D}, GRU {Hg}, LSTM {Hl}")
        print(f"{'case':<20}" + "".join(f"{b:>12}" for b in backends) + "     ratio")
        results = {}
        for name, impl in backends.items():
            cases = kernel_cases(impl, *dims, np.random.default_rng(0))
            for k, v in cases.items():
                results.setdefault(k, {})[name] = best_of(v, args.repeat, 20)
            for k in kernels.KERNELS:
                setattr(kernels, k, getattr(impl, k))
            number = 5 if Hg > 64 else 50
            results.setdefault("train step", {})[name] = best_of(
                train_step_case(*dims, np.random.default_rng(0)), args.repeat, number
            )
        for k, v in original.items():
            setattr(kernels, k, v)
        for case, row in results.items():
            line = f"{case:<20}" + "".join(f"{row[b] * 1e3:>10.3f}ms" for b in backends)
            if "numba" in row:
                line += f"  {row['numpy'] / row['numba']:>7.2f}x"
            print(line)


if __name__ == "__main__":
    main()
