"""Compare the compiled and NumPy kernel backends.

    python3 benchmarks/bench_kernels.py [--qubits 2 3 4] [--repeat 5]

Times correlations, signed_value and a multi-start coordinate ascent on a
random pure state, and checks that both backends agree.
"""
import argparse
import timeit

import numpy as np

from belldiag.kernels import get_backend, interleave
from belldiag.wwzb import mabk_sign_function, sign_coefficients


def random_state(rng, n):
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def cases(n, rng, starts):
    v = interleave(random_state(rng, n))
    coeffs = np.ascontiguousarray(sign_coefficients(mabk_sign_function(n)).reshape(-1))
    ang = rng.uniform(0, 2 * np.pi, 4 * n)
    b = get_backend("python").fill_ops(ang, n, True)
    inits = [rng.uniform(0, 2 * np.pi, 4 * n) for _ in range(starts)]

    def corr(k):
        return k.correlations(v, b, n)

    def signed(k):
        return k.signed_value(v, ang, n, True, coeffs)

    def maximize(k):
        return max(abs(k.ascend(v, a, n, True, coeffs, 1e-7, 500)[1]) for a in inits)

    return {"correlations": corr, "signed_value": signed, f"ascend x{starts}": maximize}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--starts", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    try:
        backends = {"cython": get_backend("cython"), "python": get_backend("python")}
    except ImportError:
        print("compiled extension not built; run `python3 setup.py build_ext --inplace`")
        return 1

    print(f"{'N':>2}  {'kernel':<14}{'cython [ms]':>12}{'python [ms]':>12}{'speedup':>9}  agree")
    for n in args.qubits:
        for name, fn in cases(n, np.random.default_rng([args.seed, n]), args.starts).items():
            out = {k: fn(m) for k, m in backends.items()}
            agree = np.allclose(out["cython"], out["python"], atol=1e-9)
            t = {}
            for k, m in backends.items():
                number = max(1, int(0.2 / max(timeit.timeit(lambda: fn(m), number=1), 1e-6)))
                best = min(timeit.repeat(lambda: fn(m), number=number, repeat=args.repeat))
                t[k] = 1e3 * best / number
            print(f"{n:>2}  {name:<14}{t['cython']:>12.4f}{t['python']:>12.4f}{t['python'] / t['cython']:>8.1f}x  {agree}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
