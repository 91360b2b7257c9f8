"""Superposition codebook with nested random binning."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from seclink.infotheory import Pmf
from seclink.codec.rates import CapExceeded, CodecError, CodecParams, DerivedRates, Layout, layout


@dataclass(frozen=True, eq=False)
class Codebook:
    """Random codebook shared by Alice and Bob.

    ``t_words[s1]`` are the inner codewords, ``u_words[s1, s2]`` the outer
    codewords superposed on ``t_words[s1]``.  ``b1[s1]`` is the inner bin,
    ``m12[s1, s2]``/``m21[s1, s2]`` the outer bin and ``k1[s1, s2]`` the key
    sub-bin of each codeword.
    """

    layout: Layout
    n: int
    t_words: np.ndarray
    u_words: np.ndarray
    b1: np.ndarray
    m12: np.ndarray
    m21: np.ndarray
    k1: np.ndarray
    p_t: np.ndarray
    p_u_given_t: np.ndarray
    seed: int
    joint: Pmf = field(repr=False)
    _inner_bins: dict = field(default_factory=dict, repr=False)
    _tests: dict = field(default_factory=dict, repr=False)
    _outer_bins: dict = field(default_factory=dict, repr=False)
    _onehot: dict = field(default_factory=dict, repr=False)

    def inner_bin(self, m11: int) -> np.ndarray:
        """Indices s1 whose codeword sits in inner bin ``m11``."""
        if not self._inner_bins:
            for s1, b in enumerate(self.b1.tolist()):
                self._inner_bins.setdefault(b, []).append(s1)
        return np.asarray(self._inner_bins.get(int(m11), []), dtype=np.int64)

    def outer_bin(self, s1: int, m12: int, m21: int) -> np.ndarray:
        """Indices s2 in cloud ``s1`` whose codeword sits in outer bin (m12, m21)."""
        s1 = int(s1)
        if s1 not in self._outer_bins:
            flat = self.m12[s1].astype(np.int64) * self.layout.l21 + self.m21[s1]
            order = np.argsort(flat, kind="stable")
            self._outer_bins[s1] = (flat[order], order)
        keys, order = self._outer_bins[s1]
        target = int(m12) * self.layout.l21 + int(m21)
        lo, hi = np.searchsorted(keys, target, "left"), np.searchsorted(keys, target, "right")
        return order[lo:hi]

    def onehot(self, layer: str, s1: int = 0) -> np.ndarray:
        """Cached float32 one-hot view (K * |alphabet|, n) of the t-codewords or of cloud s1."""
        key = (layer, int(s1) if layer == "u" else 0)
        if key not in self._onehot:
            if layer == "t":
                words, size = self.t_words, self.p_t.shape[0]
            else:
                words, size = self.u_words[int(s1)], self.p_u_given_t.shape[1]
            self._onehot[key] = one_hot_rows(words, size)
        return self._onehot[key]

    def tests(self, delta: float):
        """Typicality tests of the scheme at slack ``delta`` (cached)."""
        from seclink.codec.coding import SchemeTests

        if delta not in self._tests:
            self._tests[delta] = SchemeTests(self.joint, self.n, delta)
        return self._tests[delta]

    def same_as(self, other: "Codebook") -> bool:
        names = ("t_words", "u_words", "b1", "m12", "m21", "k1")
        return self.layout == other.layout and all(
            np.array_equal(getattr(self, a), getattr(other, a)) for a in names
        )


def _letters(rng: np.random.Generator, probs: np.ndarray, size) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(size), side="right").astype(np.uint8)


def generate_codebook(rates: DerivedRates, joint: Pmf, params: CodecParams) -> Codebook:
    """Draw codewords i.i.d. from p(t) and p(u|t) and bin them uniformly at random.

    ``joint`` must be the (T, U, X, Y, Z) pmf of ``rates.aux``.  The same
    ``params.seed`` always yields the same codebook.
    """
    lay = layout(rates, params)
    n = params.n
    cells = lay.n_t * n + lay.n_t * lay.n_u * (n + 3)
    if cells > params.max_cells:
        raise CapExceeded(f"codebook needs {cells} cells, cap is {params.max_cells}")
    p_tu = joint.array(("T", "U"))
    if p_tu.shape[0] > 256 or p_tu.shape[1] > 256:
        raise CodecError("alphabets larger than 256 letters are not supported")
    p_t = p_tu.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p_u_t = np.where(p_t[:, None] > 0, p_tu / np.where(p_t > 0, p_t, 1.0)[:, None], 0.0)

    rng = np.random.default_rng(np.random.SeedSequence([params.seed, 0xC0DE]))
    t_words = _letters(rng, p_t, (lay.n_t, n))
    u_words = np.empty((lay.n_t, lay.n_u, n), dtype=np.uint8)
    for s1 in range(lay.n_t):
        # u letters drawn per position from p(u | t at that position)
        uniforms = rng.random((lay.n_u, n))
        cdf = np.cumsum(p_u_t[t_words[s1]], axis=1)
        cdf[:, -1] = 1.0
        u_words[s1] = (uniforms[:, :, None] >= cdf[None, :, :]).sum(axis=2)
    b1 = rng.integers(lay.l11, size=lay.n_t)
    m12 = rng.integers(lay.l12, size=(lay.n_t, lay.n_u))
    m21 = rng.integers(lay.l21, size=(lay.n_t, lay.n_u))
    k1 = rng.integers(lay.lk1, size=(lay.n_t, lay.n_u))
    for arr in (t_words, u_words, b1, m12, m21, k1):
        arr.setflags(write=False)
    return Codebook(
        layout=lay, n=n, t_words=t_words, u_words=u_words, b1=b1, m12=m12, m21=m21, k1=k1,
        p_t=p_t, p_u_given_t=p_u_t, seed=params.seed, joint=joint,
    )


# ---------------------------------------------------------------------------
# Typicality
# ---------------------------------------------------------------------------


def joint_counts(cands: np.ndarray, ctxs: np.ndarray, n_cand: int, n_ctx: int) -> np.ndarray:
    """Joint letter counts ``N[k, m, a, c]`` of candidate k against context m.

    ``cands`` has shape (K, n), ``ctxs`` shape (M, n).
    """
    k, n = cands.shape
    m = ctxs.shape[0]
    cand_oh = (cands[:, None, :] == np.arange(n_cand, dtype=cands.dtype)[:, None]).astype(np.float32)
    ctx_oh = (ctxs[:, :, None] == np.arange(n_ctx)).astype(np.float32)
    prod = cand_oh.reshape(k * n_cand, n) @ ctx_oh.transpose(1, 0, 2).reshape(n, m * n_ctx)
    return prod.reshape(k, n_cand, m, n_ctx).transpose(0, 2, 1, 3)


def one_hot_rows(words: np.ndarray, size: int) -> np.ndarray:
    """(K, n) letters -> (K * size, n) float32 indicators, row ``k * size + a``."""
    k, n = words.shape
    oh = words[:, None, :] == np.arange(size, dtype=words.dtype)[:, None]
    return oh.reshape(k * size, n).astype(np.float32)


def single_counts(cands: np.ndarray, ctx: np.ndarray, n_cand: int, n_ctx: int) -> np.ndarray:
    """Joint letter counts ``N[k, a, c]`` of every candidate against one context."""
    out = np.zeros((cands.shape[0], n_cand, n_ctx), dtype=np.int32)
    for c in range(n_ctx):
        cols = np.flatnonzero(ctx == c)
        if len(cols) == 0:
            continue
        sub = cands[:, cols]
        for a in range(n_cand - 1):
            out[:, a, c] = np.count_nonzero(sub == a, axis=1)
        out[:, n_cand - 1, c] = len(cols) - out[:, : n_cand - 1, c].sum(axis=1)
    return out


class TypicalityTest:
    """Letter-frequency typicality against a reference pmf ``ref[a, c]``.

    A pair (candidate, context) passes when every joint letter frequency is
    within ``delta`` of ``ref`` and letters pairs of probability zero never
    occur.
    """

    def __init__(self, ref: np.ndarray, n: int, delta: float):
        self.ref = np.asarray(ref, dtype=float)
        self.n = n
        self.delta = delta
        self.lo = np.where(self.ref > 0, n * (self.ref - delta), 0.0) - 1e-9
        self.hi = np.where(self.ref > 0, n * (self.ref + delta), 0.0) + 1e-9

    def from_counts(self, counts: np.ndarray) -> np.ndarray:
        ok = (counts >= self.lo) & (counts <= self.hi)
        return ok.all(axis=(-2, -1))

    def mask(self, cands: np.ndarray, ctx: np.ndarray) -> np.ndarray:
        """Boolean mask over ``cands`` (K, n) for a single context sequence (n,)."""
        if len(cands) == 0:
            return np.zeros(0, dtype=bool)
        counts = single_counts(cands, ctx, *self.ref.shape)
        return self.from_counts(counts)

    def mask_onehot(self, cand_oh: np.ndarray, ctx: np.ndarray) -> np.ndarray:
        """Same as :meth:`mask` for candidates given by :func:`one_hot_rows`."""
        n_cand, n_ctx = self.ref.shape
        ctx_oh = (ctx[:, None] == np.arange(n_ctx)).astype(np.float32)
        counts = (cand_oh @ ctx_oh).reshape(-1, n_cand, n_ctx)
        return self.from_counts(counts)

    def matrix(self, cands: np.ndarray, ctxs: np.ndarray) -> np.ndarray:
        """Boolean (K, M) table for many contexts."""
        return self.from_counts(joint_counts(cands, ctxs, *self.ref.shape))
