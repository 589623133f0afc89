"""Two-state and four-state Markov chains over binary V/C sequences.

The four-state chain lives on symbol bigrams. States are coded as
``(older << 1) | newer`` with V = 1, C = 0:

====  =====  =================
code  state  transition prob.
====  =====  =================
0     CC     p00 = P(V | CC)
1     CV     p01 = P(V | CV)
2     VC     p10 = P(V | VC)
3     VV     p11 = P(V | VV)
====  =====  =================

The dispersion coefficient compares the variance of the vowel count under
the fitted chain with the binomial variance of an independent stream with
the same vowel rate. Writing d = p1 - p0 for the two-state dependence and

    eta = (p11 - p1) / q1        nu = (q00 - q0) / p0

for the second-order corrections, the two forms are

    CF_simple  = (1 + d) / (1 - d)

    CF_complex = ((1 + eta) / (1 - eta) + (1 + nu) / (1 - nu)) / 2
                 * CF_simple
                 + (q - p) * (nu - eta) / ((1 - eta) * (1 - nu))

and the memory depth is MD = 1 - CF. CF < 1 (MD > 0) means vowel counts
disperse less than independence allows, the signature of an alternating,
self-correcting stream.

All estimators count overlapping windows and use no smoothing: a context
that never occurs is an error, not a zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Literal, Optional, Union

import numpy as np

from .encoding import SymbolSequence
from .errors import DomainError, ZeroContextError

WhichCF = Literal["simple", "complex"]

_POLE_TOL = 1e-12


def _as_symbol_array(seq: Union[SymbolSequence, np.ndarray]) -> np.ndarray:
    if isinstance(seq, SymbolSequence):
        return seq.symbols
    arr = np.ascontiguousarray(seq, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("symbol array must be one dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("symbols must be 0 or 1")
    return arr


def _pattern(code: int, order: int) -> str:
    return "".join("V" if (code >> (order - 1 - j)) & 1 else "C" for j in range(order))


def all_patterns(order: int) -> list[str]:
    return ["".join(p) for p in product("CV", repeat=order)]


@dataclass(frozen=True)
class NgramCounts:
    """Counts of overlapping length-``order`` windows."""

    order: int
    counts: dict[str, int]
    n_effective: int

    def __getitem__(self, pattern: str) -> int:
        return self.counts[pattern]


def count_ngrams(seq: Union[SymbolSequence, np.ndarray], order: int) -> NgramCounts:
    """Count overlapping n-grams of the given order (1, 2, or 3).

    The window count is n - order + 1; a sequence shorter than the order is
    an error rather than an empty table.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {order}")
    x = _as_symbol_array(seq)
    n = x.size
    if n < order:
        raise DomainError(f"sequence of length {n} has no windows of order {order}")
    codes = x[: n - order + 1].astype(np.int64)
    for j in range(1, order):
        codes = (codes << 1) | x[j : n - order + 1 + j]
    freq = np.bincount(codes, minlength=2**order)
    counts = {_pattern(code, order): int(freq[code]) for code in range(2**order)}
    return NgramCounts(order=order, counts=counts, n_effective=n - order + 1)


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class TwoStateModel:
    """First-order chain: vowel rate plus P(V | previous symbol).

    Complements are stored rather than recomputed so that q-quantities are
    exactly 1 - p as counted.
    """

    p: float
    q: float
    p0: float
    q0: float
    p1: float
    q1: float

    def __post_init__(self):
        for name in ("p", "q", "p0", "q0", "p1", "q1"):
            _check_prob(name, getattr(self, name))
        for a, b in (("p", "q"), ("p0", "q0"), ("p1", "q1")):
            if abs(getattr(self, a) + getattr(self, b) - 1.0) > 1e-9:
                raise ValueError(f"{a} and {b} must sum to 1")

    @classmethod
    def from_probs(cls, p: float, p0: float, p1: float) -> "TwoStateModel":
        return cls(p=p, q=1.0 - p, p0=p0, q0=1.0 - p0, p1=p1, q1=1.0 - p1)


@dataclass(frozen=True)
class FourStateModel:
    """Second-order chain: P(V | two preceding symbols)."""

    p11: float
    p10: float
    p01: float
    p00: float

    def __post_init__(self):
        for name in ("p11", "p10", "p01", "p00"):
            _check_prob(name, getattr(self, name))

    @property
    def q11(self) -> float:
        return 1.0 - self.p11

    @property
    def q00(self) -> float:
        return 1.0 - self.p00

    def as_vector(self) -> np.ndarray:
        """Transition probabilities indexed by state code (older<<1)|newer."""
        return np.array([self.p00, self.p01, self.p10, self.p11], dtype=float)


def fit_models(
    counts1: NgramCounts, counts2: NgramCounts, counts3: NgramCounts
) -> tuple[TwoStateModel, FourStateModel]:
    """Maximum-likelihood estimates from unigram, bigram, and trigram counts.

    Conditional probabilities divide window counts by their context counts
    within the same window range, so complements are exact. A context with
    zero occurrences raises :class:`ZeroContextError` naming the context.
    """
    if (counts1.order, counts2.order, counts3.order) != (1, 2, 3):
        raise ValueError("expected counts of orders 1, 2 and 3")
    p = counts1["V"] / counts1.n_effective

    def conditional(cv: int, cc: int, context: str) -> float:
        denom = cv + cc
        if denom == 0:
            raise ZeroContextError(context)
        return cv / denom

    p1 = conditional(counts2["VV"], counts2["VC"], "V")
    p0 = conditional(counts2["CV"], counts2["CC"], "C")
    two = TwoStateModel.from_probs(p=p, p0=p0, p1=p1)
    four = FourStateModel(
        p11=conditional(counts3["VVV"], counts3["VVC"], "VV"),
        p10=conditional(counts3["VCV"], counts3["VCC"], "VC"),
        p01=conditional(counts3["CVV"], counts3["CVC"], "CV"),
        p00=conditional(counts3["CCV"], counts3["CCC"], "CC"),
    )
    return two, four


def fit_sequence(seq: Union[SymbolSequence, np.ndarray]) -> tuple[TwoStateModel, FourStateModel]:
    """Count orders 1..3 on the sequence and fit both models."""
    return fit_models(count_ngrams(seq, 1), count_ngrams(seq, 2), count_ngrams(seq, 3))


@dataclass(frozen=True)
class DispersionReport:
    d: float
    eta: float
    nu: float
    cf_simple: float
    cf_complex: float
    md: float
    var_independent: float
    var_dependent: float
    n: int
    which_cf: WhichCF


def dispersion_report(
    two: TwoStateModel,
    four: FourStateModel,
    n: int,
    which_cf: WhichCF = "complex",
) -> DispersionReport:
    """Dispersion coefficients and memory depth for fitted models.

    ``n`` is the symbol count behind the fit; it scales the variance
    columns only. Poles of the closed forms (d, eta, or nu at 1) raise
    :class:`DomainError` naming the offending quantity.
    """
    if which_cf not in ("simple", "complex"):
        raise ValueError(f"which_cf must be 'simple' or 'complex', got {which_cf!r}")
    if n < 1:
        raise ValueError("n must be positive")
    d = two.p1 - two.p0
    if d >= 1.0 - _POLE_TOL:
        raise DomainError(f"dispersion pole: d = p1 - p0 = {d} is at or above 1")
    if two.q1 <= 0.0:
        raise DomainError("eta undefined: q1 = P(C | V) is zero")
    if two.p0 <= 0.0:
        raise DomainError("nu undefined: p0 = P(V | C) is zero")
    eta = (four.p11 - two.p1) / two.q1
    nu = (four.q00 - two.q0) / two.p0
    if eta >= 1.0 - _POLE_TOL:
        raise DomainError(f"dispersion pole: eta = {eta} is at or above 1")
    if nu >= 1.0 - _POLE_TOL:
        raise DomainError(f"dispersion pole: nu = {nu} is at or above 1")
    cf_simple = (1.0 + d) / (1.0 - d)
    cf_complex = (
        0.5 * ((1.0 + eta) / (1.0 - eta) + (1.0 + nu) / (1.0 - nu)) * cf_simple
        + (two.q - two.p) * (nu - eta) / ((1.0 - eta) * (1.0 - nu))
    )
    cf = cf_simple if which_cf == "simple" else cf_complex
    var_independent = two.p * two.q / n
    return DispersionReport(
        d=d,
        eta=eta,
        nu=nu,
        cf_simple=cf_simple,
        cf_complex=cf_complex,
        md=1.0 - cf,
        var_independent=var_independent,
        var_dependent=cf * var_independent,
        n=n,
        which_cf=which_cf,
    )


def sequence_report(
    seq: Union[SymbolSequence, np.ndarray], which_cf: WhichCF = "complex"
) -> DispersionReport:
    """Fit both models on a sequence and build its dispersion report."""
    x = _as_symbol_array(seq)
    two, four = fit_sequence(x)
    return dispersion_report(two, four, n=x.size, which_cf=which_cf)


def transition_matrix(model: FourStateModel) -> np.ndarray:
    """Row-stochastic 4x4 matrix of the bigram-state chain."""
    T = np.zeros((4, 4))
    pvec = model.as_vector()
    for state in range(4):
        pv = pvec[state]
        T[state, ((state & 1) << 1) | 1] = pv
        T[state, ((state & 1) << 1) | 0] = 1.0 - pv
    return T


def stationary_bigram_distribution(model: FourStateModel) -> np.ndarray:
    """Stationary distribution over bigram states CC, CV, VC, VV.

    Damped power iteration on (T + I) / 2 converges for periodic chains
    too; the damping leaves the fixed points of T untouched.
    """
    T = transition_matrix(model)
    v = np.full(4, 0.25)
    for _ in range(200_000):
        nxt = 0.5 * (v + v @ T)
        if np.max(np.abs(nxt - v)) <= 1e-12:
            return nxt / nxt.sum()
        v = nxt
    raise DomainError("stationary distribution iteration did not converge")


def simulate_sequence(
    model: FourStateModel,
    length: int,
    seed: Union[int, np.random.Generator],
    init: Optional[str] = None,
) -> SymbolSequence:
    """Generate a symbol sequence from the four-state chain.

    The draw order is fixed and documented so seeded runs are reproducible:
    one uniform for the stationary initial state when ``init`` is None,
    then ``length - 2`` uniforms, one per transition, in sequence order.
    ``init`` names the first two symbols, e.g. ``"VC"``.

    The transition scan is computed by composing per-step state maps in
    logarithmic depth, which keeps long simulations at numpy speed while
    consuming exactly the uniforms listed above.
    """
    if length < 2:
        raise ValueError("length must be at least 2: the state is a bigram")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if init is None:
        weights = stationary_bigram_distribution(model)
        u0 = rng.random()
        state = int(np.searchsorted(np.cumsum(weights), u0, side="right"))
        state = min(state, 3)
    else:
        if len(init) != 2 or set(init) - {"V", "C"}:
            raise ValueError(f"init must be two symbols from {{V, C}}, got {init!r}")
        state = ((init[0] == "V") << 1) | (init[1] == "V")
    symbols = np.empty(length, dtype=np.uint8)
    symbols[0] = state >> 1
    symbols[1] = state & 1
    steps = length - 2
    if steps > 0:
        u = rng.random(steps)
        pvec = model.as_vector()
        # maps[k, s] = state after applying step k to state s
        maps = np.empty((steps, 4), dtype=np.int8)
        for s in range(4):
            maps[:, s] = ((s & 1) << 1) | (u < pvec[s])
        offset = 1
        while offset < steps:
            # prefix composition: steps [k-offset, k] collapse into step k
            maps[offset:] = np.take_along_axis(
                maps[offset:], maps[:-offset].astype(np.intp), axis=1
            )
            offset *= 2
        states = maps[:, state]
        symbols[2:] = states & 1
    return SymbolSequence(symbols=symbols, source_id="simulated")


def trigram_discrepancy(empirical: NgramCounts, simulated: NgramCounts) -> float:
    """Total absolute difference between trigram frequency profiles.

    Both inputs must be order-3 counts. The value is the L1 distance of
    the two relative-frequency vectors, so it lies in [0, 2].
    """
    if empirical.order != 3 or simulated.order != 3:
        raise ValueError("trigram_discrepancy expects order-3 counts")
    total = 0.0
    for pattern in all_patterns(3):
        fe = empirical[pattern] / empirical.n_effective
        fs = simulated[pattern] / simulated.n_effective
        total += abs(fe - fs)
    return total
