"""Jitted inner loops for collapsed Gibbs sampling.

Randomness comes from an explicit splitmix64 stream carried in a one-element
uint64 array, so sampling is reproducible and does not touch any global RNG
state.
"""

import numpy as np
from numba import njit

_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(cache=True, inline="always")
def _next_uniform(state):
    state[0] = state[0] + np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)) * _INV_2_53


def seed_state(seed: int) -> np.ndarray:
    return np.array([np.uint64(seed) ^ np.uint64(0x5DEECE66D)], dtype=np.uint64)


@njit(cache=True)
def init_assignments(word_of, offsets, order, K, z, n_dk, n_kw, n_k, state):
    """Assign uniform random topics to every token, filling the count tables."""
    for oi in range(order.shape[0]):
        d = order[oi]
        for t in range(offsets[d], offsets[d + 1]):
            k = int(_next_uniform(state) * K)
            if k >= K:
                k = K - 1
            z[t] = k
            n_dk[d, k] += 1
            n_kw[k, word_of[t]] += 1
            n_k[k] += 1


@njit(cache=True)
def sweep(word_of, offsets, order, z, n_dk, n_kw, n_k, alpha, beta, state):
    """One full pass: resample the topic of every token from its conditional.

    p(k) is proportional to (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta);
    the document-length denominator is constant in k and omitted.
    """
    K = n_k.shape[0]
    V = n_kw.shape[1]
    vbeta = V * beta
    probs = np.empty(K)
    for oi in range(order.shape[0]):
        d = order[oi]
        for t in range(offsets[d], offsets[d + 1]):
            w = word_of[t]
            k_old = z[t]
            n_dk[d, k_old] -= 1
            n_kw[k_old, w] -= 1
            n_k[k_old] -= 1

            total = 0.0
            for k in range(K):
                p = (n_dk[d, k] + alpha) * (n_kw[k, w] + beta) / (n_k[k] + vbeta)
                probs[k] = p
                total += p

            u = _next_uniform(state) * total
            k_new = K - 1
            acc = 0.0
            for k in range(K):
                acc += probs[k]
                if u < acc:
                    k_new = k
                    break

            z[t] = k_new
            n_dk[d, k_new] += 1
            n_kw[k_new, w] += 1
            n_k[k_new] += 1
