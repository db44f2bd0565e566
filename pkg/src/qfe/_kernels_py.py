"""NumPy implementations of the compiled kernels in ``_kernels.pyx``."""

import numpy as np


def likelihood_surface(log_p, counts):
    ll = np.tensordot(np.asarray(counts, dtype=float), log_p, axes=1)
    ll -= ll.max()
    np.exp(ll, out=ll)
    return ll, float(ll.sum())


def delta2_batch(values, lo, hi, t, ref_vals, weights, length):
    values = np.asarray(values, dtype=float)
    est = (1.0 - t) * values[:, lo] + t * values[:, hi]
    est -= ref_vals
    return (est * est) @ weights / length
