"""Monte Carlo estimate of the key-disagreement probability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from seclink.rate_region import AuxiliaryPair, JointSource, RateConstraints, assemble_joint
from seclink.codec.codebook import Codebook, generate_codebook
from seclink.codec.coding import decode, encode
from seclink.codec.rates import (
    CodecError,
    CodecParams,
    DerivedRates,
    check_decodability,
    derive_rates,
    layout,
)


@dataclass(frozen=True)
class SimulationReport:
    trials: int
    agreements: int
    encoder_fallbacks: int
    decoder_step1_failures: int
    decoder_step2_failures: int
    encoder_unique: int
    agreements_on_unique: int
    p_e_hat: float
    ci_lo: float
    ci_hi: float
    codebook_seed: int
    rates: DerivedRates

    @property
    def agreement_rate(self) -> float:
        return self.agreements / self.trials


def sample_source(src: JointSource, n: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    """Draw (x^n, y^n, z^n) i.i.d. from ``src``."""
    flat = src.array.ravel()
    cdf = np.cumsum(flat)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, rng.random(n), side="right")
    x, y, z = np.unravel_index(idx, src.array.shape)
    return x.astype(np.uint8), y.astype(np.uint8), z.astype(np.uint8)


def prepare(src: JointSource, aux: AuxiliaryPair, rc: RateConstraints, params: CodecParams):
    """Rates, decodability check and the report's codebook."""
    rates = derive_rates(src, aux, rc)
    check_decodability(rates, layout(rates, params), params.n)
    joint = assemble_joint(src, rates.aux)
    return rates, generate_codebook(rates, joint, params)


def trial_streams(params: CodecParams, count: int) -> list[np.random.Generator]:
    """Independent per-trial generators derived from ``params.seed``."""
    children = np.random.SeedSequence([params.seed, 0x7121]).spawn(count)
    return [np.random.default_rng(c) for c in children]


def run_trials(src: JointSource, aux: AuxiliaryPair, rc: RateConstraints, params: CodecParams,
               codebook: Codebook | None = None) -> SimulationReport:
    """Encode and decode ``params.trials`` fresh source blocks against one codebook."""
    if params.trials < 1:
        raise CodecError("trials must be >= 1")
    rates, cb = prepare(src, aux, rc, params)
    if codebook is not None:
        cb = codebook
    agree = fallbacks = step1_fail = step2_fail = unique = agree_unique = 0
    for rng in trial_streams(params, params.trials):
        x, y, _ = sample_source(src, params.n, rng)
        enc = encode(x, cb, params, rng)
        dec = decode(y, enc.m1, enc.m2, cb, params)
        # a flagged decoder failure counts as an error even if the fallback key happens to match
        ok = dec.step1_ok and dec.step2_ok and dec.key == enc.key
        agree += ok
        fallbacks += enc.fallback
        step1_fail += not dec.step1_ok
        step2_fail += dec.step1_ok and not dec.step2_ok
        if enc.unique:
            unique += 1
            agree_unique += ok
    errors = params.trials - agree
    ci = binomtest(errors, params.trials).proportion_ci(confidence_level=0.95, method="exact")
    return SimulationReport(
        trials=params.trials,
        agreements=agree,
        encoder_fallbacks=fallbacks,
        decoder_step1_failures=step1_fail,
        decoder_step2_failures=step2_fail,
        encoder_unique=unique,
        agreements_on_unique=agree_unique,
        p_e_hat=errors / params.trials,
        ci_lo=float(ci.low),
        ci_hi=float(ci.high),
        codebook_seed=cb.seed,
        rates=rates,
    )
