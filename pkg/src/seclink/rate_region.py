"""Key-rate region for correlated sources plus public and secure links.

For a source ``p(x, y, z)``, auxiliaries ``T -> U -> X -> (Y, Z)`` and link
rates ``(r1, r2)``, a key rate is achievable when::

    R_K <= I(U;Y|T) - I(U;Z|T) + r2
    r1 + r2 >= I(U;X|Y)
    r1 >= I(T;X|Y)

The separation baseline keeps the same objective but demands
``r1 >= I(U;X|Y)``: the public link alone carries the key-generation
traffic and the secure link only distributes extra key bits.

Evaluation of a single auxiliary pair goes through :mod:`seclink.infotheory`.
The searchers (:func:`optimize_key_rate`, :func:`grid_oracle`) use a batched
numpy evaluator of the same four terms, which the test-suite cross-checks
against the generic route.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from seclink import infotheory as it
from seclink.infotheory import ConditionalChannel, Pmf

FEAS_TOL = 1e-9
TIE_TOL = 1e-12
PENALTY_WEIGHT = 10.0
GRID_CAP = 50_000_000

Baseline = Literal["joint", "separation"]


class RegionError(ValueError):
    """Invalid request against the rate region (alphabet mismatch, bad cardinality, ...)."""


class GridTooLarge(RegionError):
    pass


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JointSource:
    """Discrete memoryless source ``p(x, y, z)``."""

    pmf: Pmf

    def __post_init__(self):
        if set(self.pmf.axes) != {"X", "Y", "Z"} or len(self.pmf.axes) != 3:
            raise RegionError(f"source pmf must have axes X, Y, Z; got {self.pmf.axes}")
        if self.pmf.axes != ("X", "Y", "Z"):
            object.__setattr__(self, "pmf", Pmf(("X", "Y", "Z"), self.pmf.array(("X", "Y", "Z"))))

    @classmethod
    def from_array(cls, values) -> "JointSource":
        return cls(Pmf(("X", "Y", "Z"), values))

    @classmethod
    def bsc_pair(cls, p_y: float, p_z: float, p_x: float = 0.5) -> "JointSource":
        """Uniform-ish binary X seen by Bob through BSC(p_y) and by Eve through BSC(p_z),
        with the two crossovers independent given X."""
        px = np.array([1 - p_x, p_x])
        wy = np.array([[1 - p_y, p_y], [p_y, 1 - p_y]])
        wz = np.array([[1 - p_z, p_z], [p_z, 1 - p_z]])
        return cls.from_array(px[:, None, None] * wy[:, :, None] * wz[:, None, :])

    @classmethod
    def random(cls, rng: np.random.Generator, sizes=(2, 2, 2)) -> "JointSource":
        return cls.from_array(rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes))

    @property
    def array(self) -> np.ndarray:
        return self.pmf.values

    @property
    def card_x(self) -> int:
        return self.pmf.values.shape[0]

    @property
    def card_y(self) -> int:
        return self.pmf.values.shape[1]

    @property
    def card_z(self) -> int:
        return self.pmf.values.shape[2]


@dataclass(frozen=True)
class AuxiliaryPair:
    """Test channels ``p(u|x)`` and ``p(t|u)``.

    Building ``T`` from ``U`` alone makes ``T -> U -> X -> (Y, Z)`` hold for
    every choice of the two matrices.
    """

    u_given_x: ConditionalChannel
    t_given_u: ConditionalChannel

    def __post_init__(self):
        if (self.u_given_x.input_axis, self.u_given_x.output_axis) != ("X", "U"):
            raise RegionError("u_given_x must map axis X to axis U")
        if (self.t_given_u.input_axis, self.t_given_u.output_axis) != ("U", "T"):
            raise RegionError("t_given_u must map axis U to axis T")
        if self.u_given_x.n_outputs != self.t_given_u.n_inputs:
            raise RegionError(
                f"|U| mismatch: u_given_x has {self.u_given_x.n_outputs} outputs, "
                f"t_given_u has {self.t_given_u.n_inputs} inputs"
            )

    @classmethod
    def from_matrices(cls, u_given_x, t_given_u) -> "AuxiliaryPair":
        return cls(ConditionalChannel("X", "U", u_given_x), ConditionalChannel("U", "T", t_given_u))

    @classmethod
    def trivial(cls, card_x: int, card_u: int = 1, card_t: int = 1) -> "AuxiliaryPair":
        """U and T both constant."""
        return cls(
            ConditionalChannel.constant("X", "U", card_x, card_u),
            ConditionalChannel.constant("U", "T", card_u, card_t),
        )

    @classmethod
    def identity(cls, card_x: int, card_u: int | None = None, card_t: int = 1) -> "AuxiliaryPair":
        """U = X (padded with unused letters when card_u > card_x), T constant."""
        card_u = card_x if card_u is None else card_u
        if card_u < card_x:
            raise RegionError("identity auxiliary needs card_u >= card_x")
        a = np.zeros((card_x, card_u))
        a[np.arange(card_x), np.arange(card_x)] = 1.0
        return cls.from_matrices(a, ConditionalChannel.constant("U", "T", card_u, card_t).matrix)

    @property
    def card_u(self) -> int:
        return self.u_given_x.n_outputs

    @property
    def card_t(self) -> int:
        return self.t_given_u.n_outputs

    @property
    def card_x(self) -> int:
        return self.u_given_x.n_inputs

    def key(self) -> tuple:
        """Lexicographic ordering key used to break ties between witnesses."""
        return tuple(self.u_given_x.matrix.ravel()) + tuple(self.t_given_u.matrix.ravel())


@dataclass(frozen=True)
class RateConstraints:
    r1: float
    r2: float

    def __post_init__(self):
        for name in ("r1", "r2"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise RegionError(f"{name} must be finite and nonnegative, got {v}")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class RegionTerms:
    """Mutual-information terms (bits) entering the region for one auxiliary pair."""

    i_uy_t: float
    i_uz_t: float
    i_ux_y: float
    i_tx_y: float

    @property
    def mi_difference(self) -> float:
        return self.i_uy_t - self.i_uz_t


@dataclass(frozen=True)
class RegionPoint:
    key_rate: float
    feasible: bool
    witness: AuxiliaryPair
    terms: RegionTerms
    baseline: Baseline = "joint"


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 64
    max_iterations: int = 5000
    convergence_tol: float = 1e-6
    grid_resolution: int = 16
    seed: int = 0
    initial_step: float = 0.25

    def __post_init__(self):
        if self.restarts < 1:
            raise RegionError("restarts must be >= 1")
        if self.grid_resolution < 2:
            raise RegionError("grid_resolution must be >= 2")
        if self.max_iterations < 1 or self.convergence_tol <= 0:
            raise RegionError("max_iterations must be >= 1 and convergence_tol > 0")


def default_cardinalities(src: JointSource) -> tuple[int, int]:
    """(|T|, |U|) = (|X| + 1, |X| + 2)."""
    return src.card_x + 1, src.card_x + 2


# ---------------------------------------------------------------------------
# Generic evaluation route
# ---------------------------------------------------------------------------


def _check_compatible(src: JointSource, aux: AuxiliaryPair) -> None:
    if aux.card_x != src.card_x:
        raise RegionError(f"auxiliary expects |X| = {aux.card_x}, source has |X| = {src.card_x}")


def assemble_joint(src: JointSource, aux: AuxiliaryPair) -> Pmf:
    """Joint pmf over (T, U, X, Y, Z) = p(x, y, z) p(u|x) p(t|u)."""
    _check_compatible(src, aux)
    grown = it.extend(it.extend(src.pmf, aux.u_given_x), aux.t_given_u)
    order = ("T", "U", "X", "Y", "Z")
    return Pmf(order, grown.array(order))


def region_terms(src: JointSource, aux: AuxiliaryPair) -> RegionTerms:
    joint = assemble_joint(src, aux)
    cmi = it.conditional_mutual_information
    return RegionTerms(
        i_uy_t=cmi(joint, "U", "Y", "T"),
        i_uz_t=cmi(joint, "U", "Z", "T"),
        i_ux_y=cmi(joint, "U", "X", "Y"),
        i_tx_y=cmi(joint, "T", "X", "Y"),
    )


def _joint_feasible(terms: RegionTerms, rc: RateConstraints) -> bool:
    return rc.r1 + rc.r2 >= terms.i_ux_y - FEAS_TOL and rc.r1 >= terms.i_tx_y - FEAS_TOL


def _separation_feasible(terms: RegionTerms, rc: RateConstraints) -> bool:
    return rc.r1 >= terms.i_ux_y - FEAS_TOL


def _point(src, aux, rc, baseline: Baseline) -> RegionPoint:
    terms = region_terms(src, aux)
    ok = _joint_feasible(terms, rc) if baseline == "joint" else _separation_feasible(terms, rc)
    return RegionPoint(
        key_rate=terms.mi_difference + rc.r2,
        feasible=ok,
        witness=aux,
        terms=terms,
        baseline=baseline,
    )


def theorem1_key_rate(src: JointSource, aux: AuxiliaryPair, rc: RateConstraints) -> RegionPoint:
    """Key rate ``I(U;Y|T) - I(U;Z|T) + r2`` and joint-scheme feasibility of ``aux``.

    The key rate is reported unclamped, so a negative MI difference shows up
    as a value below ``r2``.
    """
    return _point(src, aux, rc, "joint")


def separation_key_rate(src: JointSource, aux: AuxiliaryPair, rc: RateConstraints) -> RegionPoint:
    """Same objective as :func:`theorem1_key_rate`, feasible only when ``r1 >= I(U;X|Y)``."""
    return _point(src, aux, rc, "separation")


def evaluate(src, aux, rc, baseline: Baseline = "joint") -> RegionPoint:
    if baseline not in ("joint", "separation"):
        raise RegionError(f"unknown baseline {baseline!r}")
    return _point(src, aux, rc, baseline)


# ---------------------------------------------------------------------------
# Batched evaluator used by the searchers
# ---------------------------------------------------------------------------


def _batch_entropy(p: np.ndarray, n_event_axes: int) -> np.ndarray:
    axes = tuple(range(p.ndim - n_event_axes, p.ndim))
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0).sum(axis=axes)


class BatchEvaluator:
    """Vectorized region terms for stacks of channel matrices.

    ``u_given_x`` has shape ``(..., |X|, |U|)`` and ``t_given_u`` shape
    ``(..., |U|, |T|)``; leading dimensions broadcast.
    """

    def __init__(self, src: JointSource):
        p = src.array
        self.pxy = p.sum(axis=2)
        self.pxz = p.sum(axis=1)
        self.px = self.pxy.sum(axis=1)
        self.h_y = it.shannon_entropy(self.pxy.sum(axis=0))
        self.h_z = it.shannon_entropy(self.pxz.sum(axis=0))

    def u_part(self, a: np.ndarray) -> dict[str, np.ndarray]:
        """Quantities that depend on ``p(u|x)`` only."""
        wy = np.einsum("...xu,xy->...uy", a, self.pxy)
        wz = np.einsum("...xu,xz->...uz", a, self.pxz)
        h_u_given_x = np.einsum("x,...x->...", self.px, _batch_entropy(a, 1))
        i_ux_y = _batch_entropy(wy, 2) - self.h_y - h_u_given_x
        return {"wy": wy, "wz": wz, "i_ux_y": i_ux_y}

    def terms(self, a: np.ndarray, b: np.ndarray, upart: dict | None = None) -> dict[str, np.ndarray]:
        up = self.u_part(a) if upart is None else upart
        wy, wz = up["wy"], up["wz"]
        # (T, U, Y) joint: b[u, t] * wy[u, y]
        p_tuy = np.einsum("...ut,...uy->...tuy", b, wy)
        p_tuz = np.einsum("...ut,...uz->...tuz", b, wz)
        p_tu = p_tuy.sum(axis=-1)
        p_ty = p_tuy.sum(axis=-2)
        p_tz = p_tuz.sum(axis=-2)
        p_t = p_tu.sum(axis=-1)
        h_t = _batch_entropy(p_t, 1)
        h_tu = _batch_entropy(p_tu, 2)
        h_ty = _batch_entropy(p_ty, 2)
        h_tz = _batch_entropy(p_tz, 2)
        i_uy_t = h_tu + h_ty - _batch_entropy(p_tuy, 3) - h_t
        i_uz_t = h_tu + h_tz - _batch_entropy(p_tuz, 3) - h_t
        c = np.matmul(a, b)  # p(t|x)
        h_t_given_x = np.einsum("x,...x->...", self.px, _batch_entropy(c, 1))
        i_tx_y = h_ty - self.h_y - h_t_given_x
        i_ux_y = np.broadcast_to(up["i_ux_y"], i_uy_t.shape)
        clamp = lambda v: np.maximum(v, 0.0)
        return {
            "i_uy_t": clamp(i_uy_t),
            "i_uz_t": clamp(i_uz_t),
            "i_ux_y": clamp(i_ux_y),
            "i_tx_y": clamp(i_tx_y),
            "i_ty": clamp(h_t + self.h_y - h_ty),
            "i_tz": clamp(h_t + self.h_z - h_tz),
        }


def _objective(terms: dict, rc: RateConstraints, baseline: Baseline):
    value = terms["i_uy_t"] - terms["i_uz_t"] + rc.r2
    if baseline == "joint":
        violation = np.maximum(terms["i_ux_y"] - rc.r1 - rc.r2, 0.0) + np.maximum(
            terms["i_tx_y"] - rc.r1, 0.0
        )
    else:
        violation = np.maximum(terms["i_ux_y"] - rc.r1, 0.0)
    return value, violation


# ---------------------------------------------------------------------------
# Tie-breaking
# ---------------------------------------------------------------------------


@dataclass(order=False)
class _Candidate:
    value: float
    i_ux_y: float
    a: np.ndarray
    b: np.ndarray
    order: tuple = field(default=())

    def beats(self, other: "_Candidate | None") -> bool:
        """Larger key rate, then smaller I(U;X|Y), then lexicographically smaller channels."""
        if other is None:
            return True
        if self.value > other.value + TIE_TOL:
            return True
        if self.value < other.value - TIE_TOL:
            return False
        if self.i_ux_y < other.i_ux_y - TIE_TOL:
            return True
        if self.i_ux_y > other.i_ux_y + TIE_TOL:
            return False
        mine = tuple(self.a.ravel()) + tuple(self.b.ravel())
        theirs = tuple(other.a.ravel()) + tuple(other.b.ravel())
        return mine < theirs


def _to_point(src, rc, cand: _Candidate, baseline: Baseline) -> RegionPoint:
    aux = AuxiliaryPair.from_matrices(cand.a, cand.b)
    return _point(src, aux, rc, baseline)


# ---------------------------------------------------------------------------
# Multistart local search
# ---------------------------------------------------------------------------


def _move_table(n_rows: int, n_cols: int) -> np.ndarray:
    """All (row, from, to) coordinate moves on a row-stochastic matrix."""
    moves = [(r, i, j) for r in range(n_rows) for i in range(n_cols) for j in range(n_cols) if i != j]
    return np.array(moves, dtype=int).reshape(-1, 3)


def _apply_moves(m: np.ndarray, moves: np.ndarray, step: float) -> np.ndarray:
    out = np.repeat(m[None], len(moves), axis=0)
    if len(moves) == 0:
        return out
    k = np.arange(len(moves))
    r, i, j = moves[:, 0], moves[:, 1], moves[:, 2]
    amount = np.minimum(out[k, r, i], step)
    out[k, r, i] -= amount
    out[k, r, j] += amount
    return out


class _LocalSearch:
    def __init__(self, ev: BatchEvaluator, rc: RateConstraints, baseline: Baseline, cfg: OptimizerConfig,
                 card_x: int, card_u: int, card_t: int):
        self.ev = ev
        self.rc = rc
        self.baseline = baseline
        self.cfg = cfg
        self.moves_a = _move_table(card_x, card_u)
        self.moves_b = _move_table(card_u, card_t)
        self.best: _Candidate | None = None

    def _score(self, a, b, hard: bool):
        terms = self.ev.terms(a, b)
        value, violation = _objective(terms, self.rc, self.baseline)
        feasible = violation <= FEAS_TOL
        if hard:
            score = np.where(feasible, value, -np.inf)
        else:
            score = value - PENALTY_WEIGHT * violation
        return score, value, feasible, terms["i_ux_y"]

    def _record(self, a, b, value, feasible, iuxy):
        value, feasible, iuxy = np.atleast_1d(value), np.atleast_1d(feasible), np.atleast_1d(iuxy)
        if not feasible.any():
            return
        v = np.where(feasible, value, -np.inf)
        ties = np.flatnonzero(v >= v.max() - TIE_TOL)
        k = ties[np.argmin(iuxy[ties])]
        cand = _Candidate(float(value[k]), float(iuxy[k]), a[k].copy(), b[k].copy())
        if cand.beats(self.best):
            self.best = cand

    def run(self, a: np.ndarray, b: np.ndarray, hard: bool = False, step: float | None = None) -> tuple:
        cfg = self.cfg
        step = cfg.initial_step if step is None else step
        score, value, feas, iuxy = self._score(a, b, hard)
        self._record(a[None], b[None], np.atleast_1d(value), np.atleast_1d(feas), np.atleast_1d(iuxy))
        current = float(score)
        for _ in range(cfg.max_iterations):
            if step < cfg.convergence_tol:
                break
            cand_a = np.concatenate([_apply_moves(a, self.moves_a, step), np.repeat(a[None], len(self.moves_b), 0)])
            cand_b = np.concatenate([np.repeat(b[None], len(self.moves_a), 0), _apply_moves(b, self.moves_b, step)])
            if len(cand_a) == 0:
                break
            s, v, f, ix = self._score(cand_a, cand_b, hard)
            self._record(cand_a, cand_b, v, f, ix)
            k = int(np.argmax(s))
            if s[k] > current + 1e-15:
                a, b, current = cand_a[k], cand_b[k], float(s[k])
            else:
                step *= 0.5
        return a, b


def _random_start(rng: np.random.Generator, card_x: int, card_u: int, card_t: int, vertex: bool):
    if vertex:
        a = np.eye(card_u)[rng.integers(card_u, size=card_x)]
        b = np.eye(card_t)[rng.integers(card_t, size=card_u)]
        # Blend toward the vertex so the search can leave it in any direction.
        a = 0.9 * a + 0.1 * rng.dirichlet(np.ones(card_u), size=card_x)
        b = 0.9 * b + 0.1 * rng.dirichlet(np.ones(card_t), size=card_u)
        return a, b
    return rng.dirichlet(np.ones(card_u), size=card_x), rng.dirichlet(np.ones(card_t), size=card_u)


def _seeded_starts(card_x: int, card_u: int, card_t: int) -> list[tuple[np.ndarray, np.ndarray]]:
    trivial = AuxiliaryPair.trivial(card_x, card_u, card_t)
    starts = [(trivial.u_given_x.matrix.copy(), trivial.t_given_u.matrix.copy())]
    if card_u >= card_x:
        ident = AuxiliaryPair.identity(card_x, card_u, card_t)
        starts.append((ident.u_given_x.matrix.copy(), ident.t_given_u.matrix.copy()))
    return starts


def optimize_key_rate(
    src: JointSource,
    rc: RateConstraints,
    card_t: int | None = None,
    card_u: int | None = None,
    cfg: OptimizerConfig | None = None,
    baseline: Baseline = "joint",
    warm_starts: Sequence[AuxiliaryPair] = (),
) -> RegionPoint:
    """Best feasible key rate found by multistart coordinate search.

    Each restart walks the product of row simplices of ``p(u|x)`` and
    ``p(t|u)`` by moving probability mass between two letters of one row,
    taking the best improving move and halving the step when none improves.
    Constraint violations are penalized at ``PENALTY_WEIGHT`` bits per bit so
    the walk may cross infeasible ground; a second pass with hard constraints
    polishes the best feasible point.  The trivial auxiliary (always feasible)
    and any ``warm_starts`` are always among the starts.
    """
    cfg = cfg or OptimizerConfig()
    dt, du = default_cardinalities(src)
    card_t = dt if card_t is None else int(card_t)
    card_u = du if card_u is None else int(card_u)
    if card_t < 1 or card_u < 1:
        raise RegionError("cardinalities must be >= 1")
    if baseline not in ("joint", "separation"):
        raise RegionError(f"unknown baseline {baseline!r}")
    card_x = src.card_x

    starts: list[tuple[np.ndarray, np.ndarray]] = []
    for w in warm_starts:
        _check_compatible(src, w)
        if (w.card_u, w.card_t) != (card_u, card_t):
            w = _pad_aux(w, card_u, card_t)
        starts.append((w.u_given_x.matrix.copy(), w.t_given_u.matrix.copy()))
    starts += _seeded_starts(card_x, card_u, card_t)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)
    for k, child in enumerate(children):
        if len(starts) >= cfg.restarts + len(warm_starts):
            break
        rng = np.random.default_rng(child)
        starts.append(_random_start(rng, card_x, card_u, card_t, vertex=bool(k % 2)))

    ev = BatchEvaluator(src)
    best: _Candidate | None = None
    for a0, b0 in starts:
        search = _LocalSearch(ev, rc, baseline, cfg, card_x, card_u, card_t)
        search.run(a0, b0)
        if search.best is not None:
            search.run(search.best.a.copy(), search.best.b.copy(), hard=True, step=cfg.initial_step / 4)
        if search.best is not None and search.best.beats(best):
            best = search.best
    if best is None:  # unreachable: the trivial start is always feasible
        raise RegionError("no feasible auxiliary found")
    return _to_point(src, rc, best, baseline)


def _pad_aux(aux: AuxiliaryPair, card_u: int, card_t: int) -> AuxiliaryPair:
    """Embed ``aux`` into larger alphabets by adding unused letters."""
    if aux.card_u > card_u or aux.card_t > card_t:
        raise RegionError("warm start has larger alphabets than requested")
    a = np.zeros((aux.card_x, card_u))
    a[:, : aux.card_u] = aux.u_given_x.matrix
    b = np.zeros((card_u, card_t))
    b[: aux.card_u, : aux.card_t] = aux.t_given_u.matrix
    b[aux.card_u:, 0] = 1.0
    return AuxiliaryPair.from_matrices(a, b)


# ---------------------------------------------------------------------------
# Grid oracle
# ---------------------------------------------------------------------------


def simplex_grid(dim: int, resolution: int) -> np.ndarray:
    """All points of the probability simplex with coordinates in {0, 1/R, ..., 1}, lexicographic."""
    if dim == 1:
        return np.ones((1, 1))
    rows = []
    for bars in itertools.combinations(range(resolution + dim - 1), dim - 1):
        edges = (-1,) + bars + (resolution + dim - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(dim)])
    pts = np.array(rows, dtype=float) / resolution
    order = np.lexsort(pts.T[::-1])
    return pts[order]


def _channel_grid(n_rows: int, n_cols: int, resolution: int) -> np.ndarray:
    simplex = simplex_grid(n_cols, resolution)
    idx = np.array(list(itertools.product(range(len(simplex)), repeat=n_rows)), dtype=int)
    return simplex[idx]


def grid_size(card_x: int, card_t: int, card_u: int, resolution: int) -> int:
    n_u = math.comb(resolution + card_u - 1, card_u - 1)
    n_t = math.comb(resolution + card_t - 1, card_t - 1)
    return n_u**card_x * n_t**card_u


def grid_oracle(
    src: JointSource,
    rc: RateConstraints,
    card_t: int,
    card_u: int,
    resolution: int,
    baseline: Baseline = "joint",
    cap: int = GRID_CAP,
) -> RegionPoint:
    """Exhaustive maximization over channels whose entries are multiples of 1/resolution."""
    if card_t < 1 or card_u < 1 or resolution < 1:
        raise RegionError("cardinalities and resolution must be >= 1")
    if baseline not in ("joint", "separation"):
        raise RegionError(f"unknown baseline {baseline!r}")
    total = grid_size(src.card_x, card_t, card_u, resolution)
    if total > cap:
        raise GridTooLarge(f"grid has {total} points, cap is {cap}")
    a_grid = _channel_grid(src.card_x, card_u, resolution)
    b_grid = _channel_grid(card_u, card_t, resolution)
    ev = BatchEvaluator(src)
    best: _Candidate | None = None
    for a in a_grid:
        terms = ev.terms(a[None], b_grid)
        value, violation = _objective(terms, rc, baseline)
        ok = violation <= FEAS_TOL
        if not ok.any():
            continue
        v = np.where(ok, value, -np.inf)
        top = v.max()
        ties = np.flatnonzero(v >= top - TIE_TOL)
        k = ties[np.argmin(terms["i_ux_y"][ties])] if len(ties) > 1 else ties[0]
        cand = _Candidate(float(value[k]), float(terms["i_ux_y"][k]), a.copy(), b_grid[k].copy())
        if cand.beats(best):
            best = cand
    if best is None:
        raise RegionError("no feasible grid point")
    return _to_point(src, rc, best, baseline)


# ---------------------------------------------------------------------------
# T/U reduction and sweeps
# ---------------------------------------------------------------------------


def reduce_tu(src: JointSource, aux: AuxiliaryPair) -> AuxiliaryPair:
    """Fold T into U when Bob learns more about T than Eve does.

    If ``I(T;Y) <= I(T;Z)`` the pair is returned unchanged; otherwise the
    result has ``U' = (U, T)`` (letter ``u * |T| + t``) and a constant ``T'``.
    """
    joint = assemble_joint(src, aux)
    i_ty = it.mutual_information(joint, "T", "Y")
    i_tz = it.mutual_information(joint, "T", "Z")
    if i_ty <= i_tz:
        return aux
    a, b = aux.u_given_x.matrix, aux.t_given_u.matrix
    merged = (a[:, :, None] * b[None, :, :]).reshape(aux.card_x, aux.card_u * aux.card_t)
    return AuxiliaryPair.from_matrices(merged, np.ones((merged.shape[1], 1)))


@dataclass(frozen=True)
class SweepRow:
    varied_rate: float
    joint: RegionPoint
    separation: RegionPoint

    @property
    def joint_key_rate(self) -> float:
        return self.joint.key_rate

    @property
    def separation_key_rate(self) -> float:
        return self.separation.key_rate


def sweep(
    src: JointSource,
    vary: Literal["r1", "r2"],
    fixed_value: float,
    start: float,
    stop: float,
    steps: int,
    card_t: int | None = None,
    card_u: int | None = None,
    cfg: OptimizerConfig | None = None,
) -> list[SweepRow]:
    """Joint and separation optimum along one rate axis, warm-starting each point
    from the previous witnesses.  The separation witness also seeds the joint
    search, which keeps joint >= separation pointwise."""
    if vary not in ("r1", "r2"):
        raise RegionError(f"vary must be 'r1' or 'r2', got {vary!r}")
    if steps < 2 or start > stop:
        raise RegionError("sweep needs steps >= 2 and start <= stop")
    rows: list[SweepRow] = []
    prev_joint: AuxiliaryPair | None = None
    prev_sep: AuxiliaryPair | None = None
    for rate in np.linspace(start, stop, steps):
        rate = float(rate)
        rc = RateConstraints(r1=rate, r2=fixed_value) if vary == "r1" else RateConstraints(r1=fixed_value, r2=rate)
        sep = optimize_key_rate(src, rc, card_t, card_u, cfg, "separation",
                                warm_starts=[w for w in (prev_sep,) if w is not None])
        joint = optimize_key_rate(src, rc, card_t, card_u, cfg, "joint",
                                  warm_starts=[w for w in (prev_joint, sep.witness) if w is not None])
        rows.append(SweepRow(rate, joint, sep))
        prev_joint, prev_sep = joint.witness, sep.witness
    return rows


def witness_digest(aux: AuxiliaryPair) -> str:
    """Short stable digest of a witness, rounded to 12 decimals."""
    import hashlib

    payload = np.round(np.concatenate([aux.u_given_x.matrix.ravel(), aux.t_given_u.matrix.ravel()]), 12)
    shape = f"{aux.card_x}x{aux.card_u}x{aux.card_t}:".encode()
    return hashlib.sha256(shape + (payload + 0.0).tobytes()).hexdigest()[:16]
