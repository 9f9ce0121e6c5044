"""Compare the compiled window encoder with the NumPy fallback.

Each backend is timed on the bare kernel and on whole ``transform_dataset``
calls. It is also timed on a batch of ``explain`` calls, which re-run the
transform every iteration.

    python benchmarks/bench_kernels.py --n 200 --length 256 --repeat 5
"""

import argparse
import json
import timeit

import numpy as np

from mascots import _kernels_py, borf
from mascots.dataset_io import train_test_split
from mascots.engine import EngineConfig, explain
from mascots.pipeline import fit_model
from mascots.symbolic import gaussian_breakpoints
from mascots.synth import cylinder_bell_funnel

try:
    from mascots import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def backends():
    out = {"python": _kernels_py.encode_windows}
    if _kernels_c is not None:
        out["cython"] = _kernels_c.encode_windows
    return out


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=200, help="series in the transform benchmark")
    parser.add_argument("--length", type=int, default=256)
    parser.add_argument("--explain", type=int, default=10, help="instances in the explain benchmark")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", action="store_true", help="print results as JSON")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    x = np.ascontiguousarray(rng.standard_normal((args.n, args.length)))
    cuts = np.ascontiguousarray(gaussian_breakpoints(3).cuts)
    data = cylinder_bell_funnel(args.n, args.length, seed=0)
    transform = borf.BorfTransform.auto(1, args.length)
    train, test = train_test_split(cylinder_bell_funnel(60 + args.explain, 128, seed=1), args.explain / (60 + args.explain), 1)
    model = fit_model(train, "knn1", epochs=500)

    results = {}
    original = borf.encode_windows
    try:
        for name, kernel in backends().items():
            borf.encode_windows = kernel
            results[name] = {
                "kernel_s": best_of(lambda: kernel(x, 32, 4, 8, 1, cuts), args.repeat),
                "transform_dataset_s": best_of(lambda: borf.transform_dataset(data, transform), args.repeat),
                "explain_s": best_of(
                    lambda: [explain(s, model.blackbox, model.surrogate, model.transform, EngineConfig(0.1, 20, 0)) for s in test.instances],
                    max(1, args.repeat // 2),
                ),
            }
    finally:
        borf.encode_windows = original

    if args.json:
        print(json.dumps(results, indent=2))
        return
    print(f"n={args.n} length={args.length} explain={args.explain} (best of {args.repeat})")
    print(f"{'backend':<8} {'kernel':>10} {'transform':>10} {'explain':>10}")
    for name, r in results.items():
        print(f"{name:<8} {r['kernel_s'] * 1e3:>8.2f}ms {r['transform_dataset_s'] * 1e3:>8.2f}ms {r['explain_s'] * 1e3:>8.1f}ms")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print("speed-up  " + "  ".join(f"{k.split('_')[0]} x{py[k] / cy[k]:.1f}" for k in py))


if __name__ == "__main__":
    main()
