"""Exact exponentials of the two quadratic generators used everywhere.

Both generators are real antisymmetric in the occupation basis and conserve
a quantum number, so they block-diagonalize into short tridiagonal chains:

* two-mode squeeze generator  G = A1'A2' - A1 A2   (primes = daggers)
  conserves q = n1 - n2; on the chain |q+k, k> it couples k -> k+1 with
  t_k = sqrt((k+|q|+1)(k+1)).
* beam-splitter generator     K = (a'b - b'a)/2
  conserves s = na + nb; on the chain |k, s-k> it couples k -> k+1 with
  t_k = sqrt((k+1)(s-k))/2.

For a chain matrix A with A[k+1,k] = t_k, A[k,k+1] = -t_k, the Hermitian
matrix iA becomes real symmetric tridiagonal after conjugation with
D = diag(i^k), so each block is solved once with eigh_tridiagonal and
exp(theta*A) = D V exp(-i*theta*w) V^T D* is assembled from real spectra.
The truncated generator is exactly antisymmetric, hence every truncated
exponential built here is exactly unitary (to rounding).

Caches are built under a lock and read-only afterwards, so concurrent
sweep evaluation is safe.
"""

from __future__ import annotations

import threading

import numpy as np
from scipy.linalg import eigh_tridiagonal

_LOCK = threading.Lock()
_CHAIN_CACHE: dict = {}


class _Chain:
    __slots__ = ("indices", "phases", "vecs", "eigs")

    def __init__(self, indices, couplings):
        self.indices = np.asarray(indices, dtype=np.intp)
        n = len(indices)
        self.phases = np.power(1j, np.arange(n))
        if n == 1:
            self.vecs = np.ones((1, 1))
            self.eigs = np.zeros(1)
        else:
            self.eigs, self.vecs = eigh_tridiagonal(
                np.zeros(n), np.asarray(couplings, dtype=float))


def _squeeze_chains(dim):
    """Chains of G = A1'A2' - A1 A2 over flat indices n1*dim + n2."""
    chains = []
    for q in range(-(dim - 1), dim):
        k = np.arange(dim - abs(q))
        if q >= 0:
            n1, n2 = k + q, k
        else:
            n1, n2 = k, k - q
        idx = n1 * dim + n2
        t = np.sqrt((n1[:-1] + 1.0) * (n2[:-1] + 1.0))
        chains.append(_Chain(idx, t))
    return chains


def _beam_splitter_chains(dim):
    """Chains of K = (a'b - b'a)/2 over flat indices na*dim + nb."""
    chains = []
    for s in range(2 * dim - 1):
        lo, hi = max(0, s - (dim - 1)), min(s, dim - 1)
        k = np.arange(lo, hi + 1)
        idx = k * dim + (s - k)
        t = 0.5 * np.sqrt((k[:-1] + 1.0) * (s - k[:-1]))
        chains.append(_Chain(idx, t))
    return chains


_BUILDERS = {"squeeze": _squeeze_chains, "beam_splitter": _beam_splitter_chains}


def get_chains(kind, dim):
    key = (kind, dim)
    with _LOCK:
        if key not in _CHAIN_CACHE:
            _CHAIN_CACHE[key] = _BUILDERS[kind](dim)
        return _CHAIN_CACHE[key]


def apply_exponential(kind, dim, theta, flat):
    """Return exp(theta * generator) @ flat for a two-mode flat vector.

    ``flat`` may carry a trailing batch axis: shape (dim*dim,) or
    (dim*dim, batch).  Never materializes the dense exponential, so it
    stays cheap in time and memory even for long chains.
    """
    vec = np.asarray(flat, dtype=complex)
    squeeze_out = vec.ndim == 1
    if squeeze_out:
        vec = vec[:, None]
    out = np.zeros_like(vec)
    for ch in get_chains(kind, dim):
        x = np.conj(ch.phases)[:, None] * vec[ch.indices]
        y = ch.vecs @ (np.exp(-1j * theta * ch.eigs)[:, None] * (ch.vecs.T @ x))
        out[ch.indices] = ch.phases[:, None] * y
    return out[:, 0] if squeeze_out else out
