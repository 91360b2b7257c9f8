"""Joint-typicality encoder and decoder."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from seclink.infotheory import Pmf
from seclink.codec.codebook import Codebook, TypicalityTest
from seclink.codec.rates import CodecParams

Match = Literal["unique", "multiple", "none"]


@dataclass(frozen=True)
class EncodingOutcome:
    """Messages and key produced by Alice for one source block.

    ``m1 = (m11, m12)`` goes over the public link, ``m2 = (m21, k2)`` over
    the secure link and ``key = (k1, k2, m21)``.
    """

    m1: tuple[int, int]
    m2: tuple[int, int]
    key: tuple[int, int, int]
    s1: int
    s2: int
    step1: Match
    step2: Match

    @property
    def unique(self) -> bool:
        return self.step1 == "unique" and self.step2 == "unique"

    @property
    def fallback(self) -> bool:
        return self.step1 == "none" or self.step2 == "none"


@dataclass(frozen=True)
class DecodingOutcome:
    key: tuple[int, int, int]
    s1: int | None
    s2: int | None
    step1_ok: bool
    step2_ok: bool


class SchemeTests:
    """The four typicality tests of the scheme, built from the (T,U,X,Y,Z) joint."""

    def __init__(self, joint: Pmf, n: int, d: float):
        card_t, card_x, card_y = joint.size_of("T"), joint.size_of("X"), joint.size_of("Y")
        self.card_x, self.card_y = card_x, card_y
        self.enc_t = TypicalityTest(joint.array(("T", "X")), n, d)
        self.enc_u = TypicalityTest(joint.array(("U", "T", "X")).reshape(-1, card_t * card_x), n, d)
        self.dec_t = TypicalityTest(joint.array(("T", "Y")), n, d)
        self.dec_u = TypicalityTest(joint.array(("U", "T", "Y")).reshape(-1, card_t * card_y), n, d)


def _pick(rng: np.random.Generator, matches: np.ndarray, n_all: int) -> tuple[int, Match]:
    if len(matches) == 1:
        return int(matches[0]), "unique"
    if len(matches) > 1:
        return int(matches[rng.integers(len(matches))]), "multiple"
    return int(rng.integers(n_all)), "none"


def encode(
    x: np.ndarray,
    cb: Codebook,
    params: CodecParams,
    rng: np.random.Generator | None = None,
) -> EncodingOutcome:
    """Alice's encoder.

    Step 1 picks an inner codeword jointly typical with ``x``; step 2 an
    outer codeword in that cloud jointly typical with (t, x).  With several
    matches one is drawn uniformly among them; with none, uniformly from the
    whole range.  ``k2`` is drawn uniformly.
    """
    rng = np.random.default_rng(params.seed) if rng is None else rng
    tests = cb.tests(params.delta)
    x = np.asarray(x, dtype=np.uint8)
    if x.shape != (params.n,):
        raise ValueError(f"source block must have length {params.n}")
    lay = cb.layout
    s1, step1 = _pick(rng, np.flatnonzero(tests.enc_t.mask_onehot(cb.onehot("t"), x)), lay.n_t)
    ctx = cb.t_words[s1].astype(np.int64) * tests.card_x + x
    s2, step2 = _pick(rng, np.flatnonzero(tests.enc_u.mask_onehot(cb.onehot("u", s1), ctx)), lay.n_u)
    k2 = int(rng.integers(lay.l22))
    m11, m12, m21, k1 = int(cb.b1[s1]), int(cb.m12[s1, s2]), int(cb.m21[s1, s2]), int(cb.k1[s1, s2])
    return EncodingOutcome(
        m1=(m11, m12), m2=(m21, k2), key=(k1, k2, m21), s1=s1, s2=s2, step1=step1, step2=step2
    )


def decode(
    y: np.ndarray,
    m1: tuple[int, int],
    m2: tuple[int, int],
    cb: Codebook,
    params: CodecParams,
) -> DecodingOutcome:
    """Bob's decoder: unique typical inner codeword in bin m11, then unique
    typical outer codeword in bin (m12, m21) of that cloud.  A failed step
    yields key sub-bin 0."""
    tests = cb.tests(params.delta)
    y = np.asarray(y, dtype=np.uint8)
    if y.shape != (params.n,):
        raise ValueError(f"observation must have length {params.n}")
    m11, m12 = m1
    m21, k2 = m2
    cand_t = cb.inner_bin(m11)
    hits = cand_t[tests.dec_t.mask(cb.t_words[cand_t], y)] if len(cand_t) else cand_t
    if len(hits) != 1:
        return DecodingOutcome((0, k2, m21), None, None, False, False)
    s1 = int(hits[0])
    cand_u = cb.outer_bin(s1, m12, m21)
    ctx = cb.t_words[s1].astype(np.int64) * tests.card_y + y
    hits = cand_u[tests.dec_u.mask(cb.u_words[s1, cand_u], ctx)] if len(cand_u) else cand_u
    if len(hits) != 1:
        return DecodingOutcome((0, k2, m21), s1, None, True, False)
    s2 = int(hits[0])
    return DecodingOutcome((int(cb.k1[s1, s2]), k2, m21), s1, s2, True, True)
