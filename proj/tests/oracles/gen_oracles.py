"""Arbitrary-precision reference values frozen into the C++ unit tests.

Run with `python3 tests/oracles/gen_oracles.py`; every printed value is
copied verbatim into the corresponding test. Nothing here shares code with
the library.
"""
from mpmath import mp, mpf, mpc, exp, cos, tanh, pi, log, findroot

mp.dps = 40

HBAR = mpf("6.62607015e-34") / (2 * pi)
KB = mpf("1.380649e-23")


def s21_notch(f, fr, ql, qe, phi0, amp, phase0, delay):
    env = amp * exp(1j * phase0) * exp(-2j * pi * f * delay)
    return env * (1 - (ql / qe) * exp(1j * phi0) / (1 + 2j * ql * (f / fr - 1)))


def main():
    fr = mpf("4.4e9")
    ql = mpf("4e5")
    f = fr * (1 + mpf(5) / ql)
    z = s21_notch(f, fr, ql, mpf("8e5"), mpf("0.1"), mpf("0.9"), mpf("0.3"), mpf("40e-9"))
    print("s21 oracle real", mp.nstr(z.real, 20))
    print("s21 oracle imag", mp.nstr(z.imag, 20))

    # Photon number: power giving n = 1 for fr=4.4 GHz, Ql=5e5, |Qe|=1e6, phi0=0.
    omega = 2 * pi * fr
    ql = mpf("5e5")
    qc = mpf("1e6")
    p_one = HBAR * omega**2 * qc / (2 * ql**2)
    print("power for n=1 [W]", mp.nstr(p_one, 20))
    p_test = mpf("1e-18")
    print("n at 1e-18 W", mp.nstr(2 / (HBAR * omega**2) * ql**2 / qc * p_test, 20))

    # Thermal factor at 4.4 GHz, 10 mK.
    arg = HBAR * omega / (2 * KB * mpf("0.01"))
    print("thermal arg", mp.nstr(arg, 20), "tanh", mp.nstr(tanh(arg), 20))
    print("temperature for unit argument [K]", mp.nstr(HBAR * omega / (2 * KB), 20))

    # Critical photon number for reference sample 1 (root solve of the model at n = 1).
    a, d, beta = mpf("0.87e-6"), mpf("2.3e-7"), mpf("0.22")
    g = lambda nc: a / (1 + 1 / nc) ** beta + d - 1 / mpf("1.1e6")
    nc1 = findroot(g, mpf("0.4"))
    print("nc sample 1", mp.nstr(nc1, 20))
    print("loss at n=1", mp.nstr(a / (1 + 1 / nc1) ** beta + d, 20))

    # Reference sample 7b at n = 10.
    a, d, beta = mpf("0.27e-6"), mpf("2.0e-7"), mpf("0.33")
    g = lambda nc: a / (1 + 10 / nc) ** beta + d - 1 / mpf("2.2e6")
    nc7b = findroot(g, mpf("50"))
    print("nc sample 7b", mp.nstr(nc7b, 20))

    # Quartiles of [1,2,3,4] by linear interpolation with inclusive endpoints.
    xs = [1, 2, 3, 4]
    def q(p):
        h = (len(xs) - 1) * p
        lo = int(h)
        return xs[lo] + (h - lo) * (xs[min(lo + 1, len(xs) - 1)] - xs[lo])
    print("quartiles", [q(p) for p in (0, 0.25, 0.5, 0.75, 1)])


if __name__ == "__main__":
    main()
