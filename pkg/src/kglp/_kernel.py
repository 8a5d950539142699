"""Compiled SGD kernels for embedding training.

Negative draws use a splitmix64 counter whose state lives in a caller-owned
uint64 array (one slot per thread), so streams are reproducible and never
round-trip through Python integers. Edge membership is a binary search over
sorted packed keys subject * n_entities + object. The parallel driver is
hogwild: rows are updated without locks and the only guarantee is per-entry
atomicity, which SGD tolerates; bit-reproducibility holds for the serial
driver only.

Loss kinds: 0 = mean hinge (1/k) sum_i max(0, margin - pos + neg_i),
1 = sampled softmax -log exp(pos) / (exp(pos) + sum_i exp(neg_i)).
All subgradients are evaluated at the pre-update embedding values.
"""

import numba
import numpy as np
from numba import njit, prange

# splitmix64 constants; module-level so numba sees uint64-typed globals and
# never touches an out-of-int64-range literal.
_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MIX2 = np.uint64(0x94D049BB133111EB)
_SH30 = np.uint64(30)
_SH27 = np.uint64(27)
_SH31 = np.uint64(31)

# Rejection attempts per negative before keeping the last draw; bounds the
# loop on near-complete graphs at the cost of a rare edge-as-negative.
_MAX_REJECT = 32

HINGE = 0
SOFTMAX = 1


@njit(inline="always", cache=True)
def _splitmix64(state, slot):
    state[slot] = state[slot] + _SM_GAMMA
    z = state[slot]
    z = (z ^ (z >> _SH30)) * _SM_MIX1
    z = (z ^ (z >> _SH27)) * _SM_MIX2
    return z ^ (z >> _SH31)


@njit(inline="always", cache=True)
def _contains(keys, key):
    lo = 0
    hi = keys.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    return lo < keys.shape[0] and keys[lo] == key


@njit(inline="always", cache=True)
def _step(
    emb,
    u,
    v,
    keys,
    n_entities,
    k,
    lr,
    margin,
    loss_kind,
    rng_state,
    slot,
    neg_obj,
    neg_sim,
    eu,
    gu,
):
    d = emb.shape[1]
    for j in range(d):
        eu[j] = emb[u, j]
        gu[j] = 0.0
    pos = 0.0
    for j in range(d):
        pos += eu[j] * emb[v, j]
    for i in range(k):
        w = np.int64(0)
        for _ in range(_MAX_REJECT):
            r = _splitmix64(rng_state, slot)
            w = np.int64(r % np.uint64(n_entities))
            if not _contains(keys, u * n_entities + w):
                break
        neg_obj[i] = w
        s = 0.0
        for j in range(d):
            s += eu[j] * emb[w, j]
        neg_sim[i] = s

    loss = 0.0
    if loss_kind == HINGE:
        scale = lr / k
        n_active = 0
        for i in range(k):
            viol = margin - pos + neg_sim[i]
            if viol > 0.0:
                loss += viol
                n_active += 1
                w = neg_obj[i]
                for j in range(d):
                    gu[j] += emb[w, j] - emb[v, j]
        loss /= k
        if n_active > 0:
            pos_step = lr * n_active / k
            for j in range(d):
                emb[v, j] += pos_step * eu[j]
            for i in range(k):
                if margin - pos + neg_sim[i] > 0.0:
                    w = neg_obj[i]
                    for j in range(d):
                        emb[w, j] -= scale * eu[j]
            for j in range(d):
                emb[u, j] -= scale * gu[j]
    else:
        # sampled softmax over {pos} + negatives, max-subtracted
        m = pos
        for i in range(k):
            if neg_sim[i] > m:
                m = neg_sim[i]
        denom = np.exp(pos - m)
        for i in range(k):
            denom += np.exp(neg_sim[i] - m)
        p_pos = np.exp(pos - m) / denom
        loss = -(pos - m) + np.log(denom)
        coeff_v = p_pos - 1.0
        for i in range(k):
            p_i = np.exp(neg_sim[i] - m) / denom
            w = neg_obj[i]
            for j in range(d):
                gu[j] += p_i * emb[w, j]
        for j in range(d):
            gu[j] += coeff_v * emb[v, j]
        for i in range(k):
            p_i = np.exp(neg_sim[i] - m) / denom
            w = neg_obj[i]
            for j in range(d):
                emb[w, j] -= lr * p_i * eu[j]
        for j in range(d):
            emb[v, j] -= lr * coeff_v * eu[j]
        for j in range(d):
            emb[u, j] -= lr * gu[j]
    return loss


@njit(cache=True)
def train_epoch_serial(
    emb, order, subs, objs, keys, n_entities, k, lr, margin, loss_kind, rng_state
):
    d = emb.shape[1]
    neg_obj = np.empty(k, dtype=np.int64)
    neg_sim = np.empty(k, dtype=np.float64)
    eu = np.empty(d, dtype=np.float64)
    gu = np.empty(d, dtype=np.float64)
    total = 0.0
    for idx in range(order.shape[0]):
        e = order[idx]
        total += _step(
            emb,
            subs[e],
            objs[e],
            keys,
            n_entities,
            k,
            lr,
            margin,
            loss_kind,
            rng_state,
            0,
            neg_obj,
            neg_sim,
            eu,
            gu,
        )
    return total


@njit(cache=True, parallel=True)
def train_epoch_parallel(
    emb, order, subs, objs, keys, n_entities, k, lr, margin, loss_kind, rng_state
):
    d = emb.shape[1]
    total = 0.0
    for idx in prange(order.shape[0]):
        slot = numba.get_thread_id()
        neg_obj = np.empty(k, dtype=np.int64)
        neg_sim = np.empty(k, dtype=np.float64)
        eu = np.empty(d, dtype=np.float64)
        gu = np.empty(d, dtype=np.float64)
        e = order[idx]
        total += _step(
            emb,
            subs[e],
            objs[e],
            keys,
            n_entities,
            k,
            lr,
            margin,
            loss_kind,
            rng_state,
            slot,
            neg_obj,
            neg_sim,
            eu,
            gu,
        )
    return total


def softmax_hinge_flags():
    """Loss-kind integer flags, exported for the trainer."""
    return {"hinge": HINGE, "softmax": SOFTMAX}
