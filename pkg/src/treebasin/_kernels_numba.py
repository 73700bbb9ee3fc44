"""Numba-compiled twins of the numpy kernels.

Same signatures and semantics as ``_kernels_numpy``.  The per-node gate
products and the backward pass run as compiled loops; the two dense
contractions (input-times-weights and the weight-gradient accumulation)
go through ``np.dot`` so large feature counts still get BLAS throughput.
Accumulation over rows runs in a fixed order, so results are
deterministic for a given input.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _sigmoid(z):
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@njit(cache=True)
def sigmoid(z):
    out = np.empty(z.shape, dtype=np.float64)
    flat_in = z.ravel()
    flat_out = out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = _sigmoid(flat_in[i])
    return out


@njit(cache=True)
def _flat_weights(w):
    M, F, N = w.shape
    wf = np.empty((F, M * N))
    for m in range(M):
        for f in range(F):
            for n in range(N):
                wf[f, m * N + n] = w[m, f, n]
    return wf


@njit(cache=True)
def gates(X, w, b):
    B = X.shape[0]
    M, _, N = w.shape
    z = np.dot(X, _flat_weights(w))  # (B, M*N)
    G = np.empty((B, M, N))
    for i in range(B):
        for m in range(M):
            for n in range(N):
                G[i, m, n] = _sigmoid(z[i, m * N + n] + b[m, n])
    return G


@njit(cache=True)
def _flows_from_gates(G_row, path_nodes, path_sides, path_len, out):
    M = G_row.shape[0]
    L = path_nodes.shape[0]
    for m in range(M):
        for leaf in range(L):
            mu = 1.0
            for d in range(path_len[leaf]):
                g = G_row[m, path_nodes[leaf, d]]
                if path_sides[leaf, d] == 0:
                    mu *= g
                else:
                    mu *= 1.0 - g
            out[m, leaf] = mu


@njit(cache=True)
def leaf_flows(X, w, b, path_nodes, path_sides, path_len):
    B = X.shape[0]
    M = w.shape[0]
    L = path_nodes.shape[0]
    G = gates(X, w, b)
    out = np.empty((B, M, L))
    for i in range(B):
        _flows_from_gates(G[i], path_nodes, path_sides, path_len, out[i])
    return out


@njit(cache=True)
def per_tree_logits(X, w, b, pi, path_nodes, path_sides, path_len):
    B = X.shape[0]
    M = w.shape[0]
    C, L = pi.shape[1], pi.shape[2]
    G = gates(X, w, b)
    mu = np.empty((M, L))
    out = np.zeros((B, M, C))
    for i in range(B):
        _flows_from_gates(G[i], path_nodes, path_sides, path_len, mu)
        for m in range(M):
            for c in range(C):
                acc = 0.0
                for leaf in range(L):
                    acc += mu[m, leaf] * pi[m, c, leaf]
                out[i, m, c] = acc
    return out


@njit(cache=True)
def ensemble_logits(X, w, b, pi, path_nodes, path_sides, path_len):
    B = X.shape[0]
    M = w.shape[0]
    C, L = pi.shape[1], pi.shape[2]
    G = gates(X, w, b)
    mu = np.empty((M, L))
    out = np.zeros((B, C))
    for i in range(B):
        _flows_from_gates(G[i], path_nodes, path_sides, path_len, mu)
        for m in range(M):
            for c in range(C):
                acc = 0.0
                for leaf in range(L):
                    acc += mu[m, leaf] * pi[m, c, leaf]
                out[i, c] += acc
    return out


@njit(cache=True)
def loss_and_grads(X, labels, w, b, pi, path_nodes, path_sides, path_len, frozen_leaf):
    B, F = X.shape
    M, _, N = w.shape
    C, L = pi.shape[1], pi.shape[2]

    G = gates(X, w, b)
    gb = np.zeros((M, N))
    gpi = np.zeros((M, C, L))
    gz_all = np.zeros((B, M * N))
    mu = np.empty((M, L))
    logits = np.empty(C)
    delta = np.empty(C)
    loss = 0.0

    for i in range(B):
        _flows_from_gates(G[i], path_nodes, path_sides, path_len, mu)

        for c in range(C):
            logits[c] = 0.0
        for m in range(M):
            for c in range(C):
                acc = 0.0
                for leaf in range(L):
                    acc += mu[m, leaf] * pi[m, c, leaf]
                logits[c] += acc

        mx = logits[0]
        for c in range(1, C):
            if logits[c] > mx:
                mx = logits[c]
        sumexp = 0.0
        for c in range(C):
            sumexp += math.exp(logits[c] - mx)
        lse = math.log(sumexp) + mx
        loss += lse - logits[labels[i]]
        for c in range(C):
            delta[c] = math.exp(logits[c] - lse)
        delta[labels[i]] -= 1.0

        for m in range(M):
            for leaf in range(L):
                a = 0.0
                for c in range(C):
                    a += delta[c] * pi[m, c, leaf]
                t = a * mu[m, leaf]
                for d in range(path_len[leaf]):
                    n = path_nodes[leaf, d]
                    g = G[i, m, n]
                    if path_sides[leaf, d] == 0:
                        gz_all[i, m * N + n] += t * (1.0 - g)
                    else:
                        gz_all[i, m * N + n] += t * (-g)
                for c in range(C):
                    gpi[m, c, leaf] += delta[c] * mu[m, leaf]
            for n in range(N):
                gb[m, n] += gz_all[i, m * N + n]

    inv = 1.0 / B
    gw_flat = np.dot(np.ascontiguousarray(X.T), gz_all)  # (F, M*N)
    gw = np.empty((M, F, N))
    for m in range(M):
        for f in range(F):
            for n in range(N):
                gw[m, f, n] = gw_flat[f, m * N + n] * inv
    for m in range(M):
        for n in range(N):
            gb[m, n] *= inv
        for c in range(C):
            for leaf in range(L):
                gpi[m, c, leaf] *= inv
    if frozen_leaf >= 0:
        for m in range(M):
            for c in range(C):
                gpi[m, c, frozen_leaf] = 0.0
    return loss * inv, gw, gb, gpi
