"""Random singular matrices with a known structure at zero."""

import numpy as np


def _conditioned(rng, n):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    R, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q @ np.diag(rng.uniform(0.5, 2.0, n)) @ R


def _nonzero_eigs(rng, k):
    return rng.choice([-1.0, 1.0], k) * rng.uniform(0.5, 3.0, k)


def defective_singular(rng, n):
    """Similar to a matrix with a nilpotent Jordan block of size >= 2 at zero."""
    k = int(rng.integers(2, n + 1))
    J = np.zeros((n, n))
    for i in range(k - 1):
        J[i, i + 1] = 1.0
    J[k:, k:] = np.diag(_nonzero_eigs(rng, n - k))
    S = _conditioned(rng, n)
    return S @ J @ np.linalg.inv(S)


def diagonalizable_singular(rng, n):
    z = int(rng.integers(1, n))
    d = np.concatenate([np.zeros(z), _nonzero_eigs(rng, n - z)])
    S = _conditioned(rng, n)
    return S @ np.diag(d) @ np.linalg.inv(S)


def singular_batch(rng, count=500):
    out = []
    for k in range(count):
        n = int(rng.integers(2, 7))
        if k % 2:
            out.append((diagonalizable_singular(rng, n), False))
        else:
            out.append((defective_singular(rng, n), True))
    return out
