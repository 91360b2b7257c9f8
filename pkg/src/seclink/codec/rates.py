"""Rate bookkeeping for the superposition/binning scheme."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from seclink import infotheory as it
from seclink.rate_region import (
    FEAS_TOL,
    AuxiliaryPair,
    JointSource,
    RateConstraints,
    assemble_joint,
    reduce_tu,
)

RATE_TOL = 1e-9
DEGENERATE_RATE = 1e-12
MAX_CODEBOOK_CELLS = 50_000_000


class CodecError(ValueError):
    pass


class Case2Inapplicable(CodecError):
    """The (aux, rates) pair falls outside the joint scheme's bookkeeping."""


class DecodabilityError(CodecError):
    """Codebook and bin sizes leave Bob no room to decode."""


class CapExceeded(CodecError):
    pass


@dataclass(frozen=True)
class CodecParams:
    """Finite-blocklength knobs.

    ``margin`` is added to both codebook rates so the encoder finds a
    typical match.  ``bin_margin`` (default ``2 * margin``) is added to the
    inner bin rate and to the secure share of the outer bin rate so that the
    per-bin codebook rate sits ``bin_margin - margin`` below what Bob can
    resolve.  ``delta`` bounds ``|N(a,b)/n - P(a,b)|`` in the typicality test.
    """

    n: int
    delta: float = 0.2
    margin: float = 0.1
    seed: int = 0
    trials: int = 1000
    bin_margin: float | None = None
    max_cells: int = MAX_CODEBOOK_CELLS

    def __post_init__(self):
        if self.n < 1:
            raise CodecError("blocklength n must be >= 1")
        if not 0 < self.delta < 1:
            raise CodecError("delta must lie in (0, 1)")
        if self.margin <= 0:
            raise CodecError("margin must be > 0")
        if self.bin_margin is not None and self.bin_margin < 0:
            raise CodecError("bin_margin must be >= 0")

    @property
    def effective_bin_margin(self) -> float:
        return 2.0 * self.margin if self.bin_margin is None else self.bin_margin


@dataclass(frozen=True)
class DerivedRates:
    """Per-symbol rates (bits) of every message and codebook layer.

    ``aux`` is the auxiliary pair the rates refer to, after the T/U
    reduction for the joint case.
    """

    r11: float
    r12: float
    r21: float
    r22: float
    r_t: float
    r_u: float
    r_k1: float
    case: Literal["separate", "joint"]
    aux: AuxiliaryPair
    i_ty: float
    i_uy_t: float

    @property
    def key_rate(self) -> float:
        return self.r_k1 + self.r21 + self.r22


def _clip(v: float) -> float:
    return 0.0 if abs(v) <= RATE_TOL else v


def derive_rates(src: JointSource, aux: AuxiliaryPair, rc: RateConstraints) -> DerivedRates:
    """Split the link budgets across inner code, outer code and key distribution.

    When ``r1 >= I(U;X|Y)`` the public link alone carries both code layers
    (``case = "separate"``) and the whole secure rate goes to the uniformly
    drawn key part ``k2``.  Otherwise the secure link also carries the
    ``m21`` share of the outer bin index and only ``r2 - r21`` is left for
    ``k2``.
    """
    joint = assemble_joint(src, aux)
    cmi = it.conditional_mutual_information
    i_ux_y = cmi(joint, "U", "X", "Y")
    if rc.r1 >= i_ux_y - FEAS_TOL:
        case = "separate"
    else:
        case = "joint"
        if rc.r1 < cmi(joint, "T", "X", "Y") - FEAS_TOL:
            raise Case2Inapplicable(
                f"public rate {rc.r1} is below I(T;X|Y) = {cmi(joint, 'T', 'X', 'Y'):.6f}"
            )
        aux = reduce_tu(src, aux)
        joint = assemble_joint(src, aux)

    r11 = cmi(joint, "T", "X", "Y")
    i_ux_yt = cmi(joint, "U", "X", ("Y", "T"))
    r_t = it.mutual_information(joint, "T", "X")
    r_u = cmi(joint, "U", "X", "T")
    i_uy_t = cmi(joint, "U", "Y", "T")
    r_k1 = i_uy_t - cmi(joint, "U", "Z", "T")
    i_ty = it.mutual_information(joint, "T", "Y")

    if case == "separate":
        r12, r21, r22 = i_ux_yt, 0.0, rc.r2
    else:
        r12 = _clip(rc.r1 - r11)
        r21 = _clip(i_ux_yt - r12)
        r22 = _clip(rc.r2 - r21)
        for name, v in (("r12", r12), ("r21", r21), ("r22", r22)):
            if v < 0:
                raise Case2Inapplicable(f"{name} = {v:.6f} < 0 for r1={rc.r1}, r2={rc.r2}")
    return DerivedRates(
        r11=_clip(r11), r12=r12, r21=r21, r22=r22, r_t=_clip(r_t), r_u=_clip(r_u),
        r_k1=r_k1, case=case, aux=aux, i_ty=i_ty, i_uy_t=i_uy_t,
    )


def index_range(n: int, rate: float) -> int:
    """ceil(2^(n * rate)), at least 1."""
    if rate <= DEGENERATE_RATE:
        return 1
    return max(1, math.ceil(2.0 ** (n * rate) - 1e-9))


@dataclass(frozen=True)
class Layout:
    """Index ranges actually used at blocklength n."""

    n_t: int
    n_u: int
    l11: int
    l12: int
    l21: int
    l22: int
    lk1: int

    def per_symbol(self, count: int, n: int) -> float:
        return math.log2(count) / n


def layout(rates: DerivedRates, params: CodecParams) -> Layout:
    """Codebook and bin sizes.

    Non-degenerate layers get ``margin`` on the codebook rate and
    ``bin_margin`` on the bin rate: on ``m11`` for the inner layer, and for
    the outer layer on ``m21`` in the joint case (taken back from ``k2`` as
    far as ``r22`` allows) or on ``m12`` in the separate case.  The key
    sub-bins shrink by ``bin_margin`` so the key material stays ``margin``
    below what Eve cannot resolve.
    """
    n, mu, beta = params.n, params.margin, params.effective_bin_margin
    n_t = index_range(n, rates.r_t + mu) if rates.r_t > DEGENERATE_RATE else 1
    n_u = index_range(n, rates.r_u + mu) if rates.r_u > DEGENERATE_RATE else 1
    r11 = rates.r11 + (beta if n_t > 1 else 0.0)
    r12, r21, r22 = rates.r12, rates.r21, rates.r22
    if n_u > 1:
        if rates.case == "joint":
            r21 += beta
            r22 = max(r22 - beta, 0.0)
        else:
            r12 += beta
    return Layout(
        n_t=n_t,
        n_u=n_u,
        l11=index_range(n, r11) if n_t > 1 else 1,
        l12=index_range(n, r12) if n_u > 1 else 1,
        l21=index_range(n, r21) if n_u > 1 else 1,
        l22=index_range(n, r22),
        lk1=index_range(n, max(rates.r_k1 - beta, 0.0)) if n_u > 1 else 1,
    )


def check_decodability(rates: DerivedRates, lay: Layout, n: int) -> None:
    """Bin sizes must satisfy R_T - R_11 < I(T;Y) and R_U - R_12 - R_21 < I(U;Y|T).

    Layers with a single codeword are exempt.
    """
    lg = lambda c: math.log2(c) / n
    if lay.n_t > 1 and not lg(lay.n_t) - lg(lay.l11) < rates.i_ty:
        raise DecodabilityError(
            f"inner layer: R_T - R_11 = {lg(lay.n_t) - lg(lay.l11):.4f} >= I(T;Y) = {rates.i_ty:.4f}"
        )
    if lay.n_u > 1 and not lg(lay.n_u) - lg(lay.l12) - lg(lay.l21) < rates.i_uy_t:
        raise DecodabilityError(
            f"outer layer: R_U - R_12 - R_21 = {lg(lay.n_u) - lg(lay.l12) - lg(lay.l21):.4f} "
            f">= I(U;Y|T) = {rates.i_uy_t:.4f}"
        )
