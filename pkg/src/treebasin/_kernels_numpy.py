"""Vectorized numpy kernels (reference backend).

Shapes throughout: X (B, F) inputs, w (M, F, N), b (M, N), pi (M, C, L),
path tables (L, D) with per-leaf lengths (L,).  All arrays float64.
"""

from __future__ import annotations

import numpy as np


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function."""
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def gates(X, w, b):
    """Per-node sigmoid gates, shape (B, M, N)."""
    z = np.einsum("bf,mfn->bmn", X, w, optimize=True) + b[None, :, :]
    return sigmoid(z)


def leaf_flows(X, w, b, path_nodes, path_sides, path_len):
    """Fraction of each input reaching each leaf, shape (B, M, L)."""
    G = gates(X, w, b)
    gp = G[:, :, path_nodes]  # (B, M, L, D)
    factors = np.where(path_sides[None, None] == 0, gp, 1.0 - gp)
    pad = np.arange(path_nodes.shape[1]) >= path_len[:, None]  # (L, D)
    factors = np.where(pad[None, None], 1.0, factors)
    return factors.prod(axis=3)


def per_tree_logits(X, w, b, pi, path_nodes, path_sides, path_len):
    """Per-tree class logits, shape (B, M, C)."""
    mu = leaf_flows(X, w, b, path_nodes, path_sides, path_len)
    return np.einsum("bml,mcl->bmc", mu, pi, optimize=True)


def ensemble_logits(X, w, b, pi, path_nodes, path_sides, path_len):
    """Summed class logits of the whole ensemble, shape (B, C)."""
    return per_tree_logits(X, w, b, pi, path_nodes, path_sides, path_len).sum(axis=1)


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def loss_and_grads(X, labels, w, b, pi, path_nodes, path_sides, path_len, frozen_leaf):
    """Mean cross-entropy and its gradient w.r.t. every parameter.

    Returns (loss, gw, gb, gpi) where the gradient arrays match the
    parameter shapes.  ``frozen_leaf`` >= 0 pins that leaf column of the
    pi gradient to zero.
    """
    B = X.shape[0]
    M, _, N = w.shape
    L = path_nodes.shape[0]

    G = gates(X, w, b)
    gp = G[:, :, path_nodes]
    factors = np.where(path_sides[None, None] == 0, gp, 1.0 - gp)
    pad = np.arange(path_nodes.shape[1]) >= path_len[:, None]
    factors = np.where(pad[None, None], 1.0, factors)
    mu = factors.prod(axis=3)  # (B, M, L)

    logits = np.einsum("bml,mcl->bc", mu, pi, optimize=True)
    log_probs = _log_softmax(logits)
    loss = -log_probs[np.arange(B), labels].mean()

    delta = np.exp(log_probs)  # softmax
    delta[np.arange(B), labels] -= 1.0

    # d loss / d z_n, accumulated over the leaves whose paths cross node n
    t = np.einsum("bc,mcl->bml", delta, pi, optimize=True) * mu
    gz = np.zeros((B, M, N))
    for leaf in range(L):
        for d in range(path_len[leaf]):
            n = path_nodes[leaf, d]
            g = G[:, :, n]
            if path_sides[leaf, d] == 0:
                gz[:, :, n] += t[:, :, leaf] * (1.0 - g)
            else:
                gz[:, :, n] += t[:, :, leaf] * (-g)

    gw = np.einsum("bf,bmn->mfn", X, gz, optimize=True) / B
    gb = gz.sum(axis=0) / B
    gpi = np.einsum("bc,bml->mcl", delta, mu, optimize=True) / B
    if frozen_leaf >= 0:
        gpi[:, :, frozen_leaf] = 0.0
    return float(loss), gw, gb, gpi
