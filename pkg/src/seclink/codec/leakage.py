"""Key leakage (1/n) I(K; Z^n, M1) of a sampled codebook.

``K = (k1, k2, m21)`` with ``k2`` drawn independently of everything Eve
sees, so ``I(K; Z^n, M1) = I(k1, m21; Z^n, M1)``.  The exact route uses
that reduction; the plug-in route estimates the full ``I(K; .)`` from
samples.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import sparse

from seclink.infotheory import xlog2x
from seclink.rate_region import AuxiliaryPair, JointSource, RateConstraints
from seclink.codec.codebook import Codebook
from seclink.codec.coding import encode
from seclink.codec.rates import CapExceeded, CodecError, CodecParams
from seclink.codec.simulate import prepare, sample_source, trial_streams

ENUMERATION_CAP = 2_000_000_000
X_CHUNK = 512
PLUGIN_BUCKETS = 256


@dataclass(frozen=True)
class LeakageReport:
    method: Literal["exact", "plugin"]
    leakage_per_symbol: float
    leakage_bits: float
    size: int
    n: int
    codebook_seed: int


def all_sequences(card: int, n: int) -> np.ndarray:
    """Every length-n sequence over ``range(card)``, lexicographic, as uint8 rows."""
    return np.array(list(itertools.product(range(card), repeat=n)), dtype=np.uint8).reshape(-1, n)


def _choice_weights(typical: np.ndarray) -> np.ndarray:
    """Encoder selection probabilities from a (K, M) typicality table.

    Column m is uniform over typical rows, or uniform over all rows when
    none is typical.
    """
    k = typical.shape[0]
    hits = typical.sum(axis=0)
    w = np.where(hits > 0, typical / np.maximum(hits, 1), 1.0 / k)
    return w.astype(float)


def apply_memoryless(table: np.ndarray, channel: np.ndarray, n: int) -> np.ndarray:
    """Push a (|X|^n, C) table through ``channel`` (|X|, |Z|) applied letterwise.

    Returns the (|Z|^n, C) table ``sum_x table[x, c] * prod_i channel[x_i, z_i]``.
    """
    cx, cz = channel.shape
    c = table.shape[1]
    t = table.reshape((cx,) * n + (c,))
    for axis in range(n):
        t = np.moveaxis(np.tensordot(t, channel, axes=([axis], [0])), -1, axis)
    return t.reshape(cz**n, c)


def _cell_distribution(cb: Codebook, params: CodecParams, xs: np.ndarray) -> np.ndarray:
    """P(m1 cell, w cell | x) for each x row; shape (M, L11*L12, Lk1*L21)."""
    lay = cb.layout
    tests = cb.tests(params.delta)
    card_x = tests.card_x
    n_m1, n_w = lay.l11 * lay.l12, lay.lk1 * lay.l21
    out = np.zeros((len(xs), n_m1 * n_w))
    p_s1 = _choice_weights(tests.enc_t.matrix(cb.t_words, xs))  # (N_T, M)
    for s1 in range(lay.n_t):
        if not p_s1[s1].any():
            continue
        m1 = cb.b1[s1] * lay.l12 + cb.m12[s1].astype(np.int64)
        w = cb.k1[s1].astype(np.int64) * lay.l21 + cb.m21[s1]
        cell = m1 * n_w + w
        scatter = sparse.csr_matrix(
            (np.ones(lay.n_u), (cell, np.arange(lay.n_u))), shape=(n_m1 * n_w, lay.n_u)
        )
        ctx = cb.t_words[s1].astype(np.int64)[None, :] * card_x + xs
        for lo in range(0, len(xs), X_CHUNK):
            sl = slice(lo, lo + X_CHUNK)
            p_s2 = _choice_weights(tests.enc_u.matrix(cb.u_words[s1], ctx[sl]))  # (N_U, m)
            out[sl] += (scatter @ p_s2).T * p_s1[s1, sl, None]
    return out.reshape(len(xs), n_m1, n_w)


def leakage_exact(src: JointSource, aux: AuxiliaryPair, rc: RateConstraints, params: CodecParams,
                  cap: int = ENUMERATION_CAP, codebook: Codebook | None = None) -> LeakageReport:
    """Exact (1/n) I(K; Z^n, M1) for the codebook of ``params.seed``.

    Enumerates every x^n, averages over the encoder's random choices and
    ``k2``, and pushes the result through the memoryless X -> Z channel.
    """
    rates, cb = prepare(src, aux, rc, params)
    if codebook is not None:
        cb = codebook
    lay, n = cb.layout, params.n
    card_x, card_z = src.card_x, src.card_z
    work = card_x**n * lay.n_t * max(lay.n_u, 1)
    if work > cap or card_z**n * lay.l11 * lay.l12 * lay.lk1 * lay.l21 > cap:
        raise CapExceeded(f"enumeration needs ~{work} codeword comparisons, cap is {cap}")

    xs = all_sequences(card_x, n)
    px = src.array.sum(axis=(1, 2))
    p_xseq = np.prod(px[xs], axis=1)
    pxz = src.array.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        z_given_x = np.where(px[:, None] > 0, pxz / np.where(px > 0, px, 1.0)[:, None], 0.0)

    cells = _cell_distribution(cb, params, xs) * p_xseq[:, None, None]  # P(x, m1, w)
    n_m1, n_w = cells.shape[1], cells.shape[2]
    h_w_acc = np.zeros(n_w)
    h_zm1 = h_zm1w = 0.0
    for m1 in range(n_m1):
        slab = cells[:, m1, :]
        if not slab.any():
            continue
        joint = apply_memoryless(slab, z_given_x, n)  # P(z, m1, w)
        h_w_acc += joint.sum(axis=0)
        h_zm1w -= xlog2x(joint).sum()
        h_zm1 -= xlog2x(joint.sum(axis=1)).sum()
    h_w = -xlog2x(h_w_acc).sum()
    mi = max(h_w + h_zm1 - h_zm1w, 0.0) if abs(h_w + h_zm1 - h_zm1w) > 1e-12 else 0.0
    return LeakageReport("exact", mi / n, mi, card_x**n, n, cb.seed)


def plugin_mi(a: np.ndarray, b: np.ndarray) -> float:
    """Plug-in mutual information (bits) between two integer label arrays."""
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    joint = np.zeros((ai.max() + 1, bi.max() + 1))
    np.add.at(joint, (ai, bi), 1.0)
    joint /= len(a)
    return float(-xlog2x(joint.sum(1)).sum() - xlog2x(joint.sum(0)).sum() + xlog2x(joint).sum())


def _bucket(z: np.ndarray, m1: tuple[int, int], buckets: int | None) -> int:
    payload = z.tobytes() + np.asarray(m1, dtype=np.int64).tobytes()
    h = int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")
    return h if buckets is None else h % buckets


def leakage_plugin(src: JointSource, aux: AuxiliaryPair, rc: RateConstraints, params: CodecParams,
                   buckets: int | None = PLUGIN_BUCKETS, codebook: Codebook | None = None) -> LeakageReport:
    """Plug-in estimate of (1/n) I(K; Z^n, M1) from ``params.trials`` encodings.

    Eve's view (z^n, m1) is hashed into ``buckets`` classes (``None`` keeps
    every distinct view).  Bucketing trades the upward small-sample bias of
    the plug-in estimate against the information lost to hash collisions.
    """
    if params.trials < 1000:
        raise CodecError("plug-in leakage needs at least 1000 trials")
    rates, cb = prepare(src, aux, rc, params)
    if codebook is not None:
        cb = codebook
    lay = cb.layout
    keys = np.empty(params.trials, dtype=np.int64)
    views = np.empty(params.trials, dtype=np.uint64)
    for i, rng in enumerate(trial_streams(params, params.trials)):
        x, _, z = sample_source(src, params.n, rng)
        enc = encode(x, cb, params, rng)
        k1, k2, m21 = enc.key
        keys[i] = (k1 * lay.l22 + k2) * lay.l21 + m21
        views[i] = _bucket(z, enc.m1, buckets)
    mi = max(plugin_mi(keys, views), 0.0)
    return LeakageReport("plugin", mi / params.n, mi, params.trials, params.n, cb.seed)
