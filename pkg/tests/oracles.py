"""Reference implementations used only by tests.

These are written separately from the package code paths they check, in
plain loops over linear quantities.
"""

import itertools
import math

import numpy as np


def friis_linear_db(stages):
    """Noise figure of a cascade from (gain_db, nf_db) pairs, evaluated term by term."""
    factors = [10 ** (nf / 10) for _, nf in stages]
    gains = [10 ** (g / 10) for g, _ in stages]
    total = factors[0]
    for i in range(1, len(stages)):
        product = 1.0
        for j in range(i):
            product *= gains[j]
        total += (factors[i] - 1) / product
    return 10 * math.log10(total)


def q_function(x):
    return 0.5 * math.erfc(x / math.sqrt(2))


def brute_force_window(mu0, mu1, s):
    """Argmax over all contiguous windows of the matched-filter SNR.

    Uses the closed form SNR^2 = sum((mu1 - mu0)^2 / s^2) over the window,
    which is what matched weights achieve; ties keep the shortest, then
    earliest window.
    """
    n = len(mu0)
    s = np.asarray(s, dtype=float)
    positive = s[s > 0]
    s_eff = np.where(s > 0, s, positive.min() if positive.size else 1.0)
    ratios = [(mu1[k] - mu0[k]) / s_eff[k] for k in range(n)]
    peak = max(abs(r) for r in ratios) or 1.0
    contrib = [(r / peak) ** 2 for r in ratios]
    candidates = []
    for a, b in itertools.combinations_with_replacement(range(n), 2):
        snr2 = math.fsum(contrib[a:b + 1])
        candidates.append((snr2, -(b - a), -a, (a, b)))
    best = max(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] >= best * (1 - 1e-12)]
    return max(tied, key=lambda c: (c[1], c[2]))[3]


def fisher_direction(mu0, mu1, s):
    """Fisher LDA direction Sigma^-1 (mu1 - mu0) for diagonal Sigma, by explicit solve."""
    sigma = np.diag(np.asarray(s, dtype=float) ** 2)
    return np.linalg.solve(sigma, np.asarray(mu1) - np.asarray(mu0))


def repetition_syndrome(bits):
    return bits[0] ^ bits[1], bits[1] ^ bits[2]


def naive_accumulator(ftw, n_bits, n_samples):
    """Phase accumulator by repeated modular addition with Python ints."""
    acc, out = 0, []
    for _ in range(n_samples):
        out.append(acc)
        acc = (acc + ftw) % (1 << n_bits)
    return out
