# SPDX-License-Identifier: Apache-2.0
#
# Independent reference values for the stored six-panel saturation fixture.
# Stand-in coefficients come from an ordinary least-squares fit (numpy) of the
# p=2 soft limiter; Bussgang moments are computed by quadrature over the
# exponential distribution of |x|^2; the best subset by enumeration.

import itertools
import math

import mpmath as mp
import numpy as np

mp.mp.dps = 30

SAT = 10.0
LAMBDA = 0.14275706


def standin():
    r = np.array([1.2 * i / 255 for i in range(256)])
    target = r / (1 + r**4) ** 0.25
    basis = np.stack([r ** (2 * k + 1) for k in range(6)], 1)
    a, *_ = np.linalg.lstsq(basis, target, rcond=None)
    return [float(v) / SAT**k for k, v in enumerate(a)]


def moments(a, rho):
    rho = mp.mpf(rho)
    p = lambda t: sum(mp.mpf(c) * t**k for k, c in enumerate(a))
    dens = lambda t: mp.e ** (-t / rho) / rho
    g = mp.quad(lambda t: t * p(t) * dens(t), [0, rho, 10 * rho, mp.inf]) / rho
    total = mp.quad(lambda t: t * p(t) ** 2 * dens(t), [0, rho, 10 * rho, mp.inf])
    return g, total - g * g * rho


def compression_point(a):
    f = lambda r: 20 * mp.log10(abs(moments(a, r)[0] / a[0])) + 1
    lo = mp.mpf("0.01") * SAT
    while f(lo * mp.mpf("1.05")) > 0:
        lo *= mp.mpf("1.05")
    return mp.findroot(f, (lo, lo * mp.mpf("1.05")), solver="bisect")


def main():
    a = standin()
    rho_ref = compression_point(a)
    print("rho_ref", mp.nstr(rho_ref, 17))
    n_panels, m_ant, pitch, d, off, boff, snr = 6, 16, 5.0, 20.0, 12.5, 1.0, 10.0
    xs = [(c - 0.5 * (n_panels - 1)) * pitch * LAMBDA for c in range(n_panels)]
    ue = (off * LAMBDA, 0.0, math.sqrt(d * d - off * off) * LAMBDA)
    gain = lambda dist: (LAMBDA / (4 * math.pi * dist)) ** 2
    h_c = gain(math.sqrt(sum(u * u for u in ue)))
    p_tx = float(rho_ref) / h_c * 10 ** (-boff / 10)
    sigma2 = p_tx * h_c / 10 ** (snr / 10)
    h = [gain(math.dist(ue, (x, 0.0, 0.0))) for x in xs]
    rho = [p_tx * v for v in h]
    eff, dist = [], []
    for hn, rn in zip(h, rho):
        g, c = moments(a, rn)
        eff.append(hn * float(g) ** 2)
        dist.append(float(c))

    def sndr(s):
        g = sum(eff[i] for i in s)
        cg = sum(dist[i] * eff[i] for i in s)
        return p_tx * m_ant * g / (cg / g + sigma2)

    subsets = [s for k in (1, 2) for s in itertools.combinations(range(n_panels), k)]
    best = max(subsets, key=lambda s: (sndr(s), [-i for i in s]))
    print("rho", [repr(v) for v in rho])
    print("subsets", len(subsets), "best", best, "sndr", repr(sndr(best)))
    print("most saturated", max(range(n_panels), key=lambda i: rho[i]))


if __name__ == "__main__":
    main()
