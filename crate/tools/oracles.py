#!/usr/bin/env python3
"""Independent high-precision oracles for the frozen constants in the test suites.

Requires mpmath. Every value asserted in a test as "oracle" was produced by one
of the sections below; rerun with `python3 tools/oracles.py [section]`.
"""
import sys
from mpmath import mp, mpf, zeta, sqrt, pi, exp, ncdf, npdf, factorial, log, quad, inf, loggamma, gammainc, findroot, erfinv

mp.dps = 40
Phi, phi = ncdf, npdf


def section_specfun():
    print("Phi(1)", mp.nstr(Phi(1), 17), "phi(1)", mp.nstr(phi(1), 17))
    print("Phi(-8)", mp.nstr(Phi(-8), 17), "Phi(-30)", mp.nstr(Phi(-30), 17))
    for p in ("0.975", "0.8413447", "1e-10", "0.999999"):
        print("quantile", p, mp.nstr(sqrt(2) * erfinv(2 * mpf(p) - 1), 17))
    for x in ("0.5", "3", "10.5", "100", "1000.25"):
        print("lngamma", x, mp.nstr(loggamma(mpf(x)), 20))
    for l in range(0, 6):
        print("zeta plus", l, mp.nstr(zeta(mpf(1) / 2 - l), 17), "minus", mp.nstr(zeta(-mpf(1) / 2 - l), 17))
    for l in (10, 20, 30):
        print("zeta plus", l, mp.nstr(zeta(mpf(1) / 2 - l), 17), "minus", mp.nstr(zeta(-mpf(1) / 2 - l), 17))
    # Poisson tails P(N >= c) = regularized lower gamma P(c, m)
    for m, c in ((1e6, 1000000), (1e6, 1001000), (1e6, 998000), (10000, 10100), (50, 80), (0.5, 7)):
        m = mpf(m)
        pgeq = gammainc(c, 0, m, regularized=True)
        print("pois_geq", m, c, mp.nstr(pgeq, 17))


def g(b):
    return 1 / (1 + b * Phi(b) / phi(b))


def section_qed():
    for b in ("0.1", "0.5", "1", "2", "8", "12"):
        b = mpf(b)
        print("g", b, mp.nstr(g(b), 17), "loss", mp.nstr(phi(b) / Phi(b), 17))
    b, gam = mpf("0.5"), mpf(1)
    print("finite buffer", mp.nstr(1 / (1 + b * Phi(b) / ((1 - exp(-b * gam)) * phi(b))), 17))
    k = lambda x: phi(x) / Phi(-x)
    for b, th in (("0.5", "1"), ("0.5", "4"), ("-0.5", "0.25"), ("1", "0.1")):
        b, th = mpf(b), mpf(th)
        den = 1 + sqrt(th) * k(b / sqrt(th)) / k(-b)
        print("garnett", b, th, mp.nstr(1 / den, 17), mp.nstr((sqrt(th) * k(b / sqrt(th)) - b) / den, 17))


def section_grw():
    def pzero(b):
        s = sum(zeta(mpf(1) / 2 - l) / (factorial(l) * (2 * l + 1)) * (-b * b / 2) ** l for l in range(250))
        return sqrt(2) * b * exp(b / sqrt(2 * pi) * s)

    def mmax(b):
        s = sum(zeta(-mpf(1) / 2 - l) / (factorial(l) * (2 * l + 1) * (2 * l + 2)) * (-b * b / 2) ** l for l in range(250))
        return 1 / (2 * b) + zeta(mpf(1) / 2) / sqrt(2 * pi) + b / 4 + b * b / sqrt(2 * pi) * s

    for b in ("0.05", "0.1", "0.5", "1", "2", "3"):
        b = mpf(b)
        print("grw", b, mp.nstr(pzero(b), 17), mp.nstr(mmax(b), 17))


def section_cost():
    def gb(b):
        return g(b) ** 2 * (mpf(1) / 3 + b ** 2 / 6 + Phi(b) / phi(b) * (b / 2 + b ** 3 / 6))

    for r, start in (("0.1", 1.6), ("1", 0.8), ("10", 0.3)):
        r = mpf(r)
        ks = lambda b: r * b + g(b) / b
        bs = findroot(lambda b: mp.diff(ks, b), start)
        bb = -mp.diff(gb, bs) / mp.diff(ks, bs, 2)
        print("cost r", r, "beta*", mp.nstr(bs, 17), "K*", mp.nstr(ks(bs), 17), "beta_bullet", mp.nstr(bb, 17))


if __name__ == "__main__":
    wanted = sys.argv[1:] or ["specfun", "qed", "grw", "cost"]
    for name in wanted:
        print("==", name)
        globals()["section_" + name]()
