"""Orchestration: wire corpus, encoding, models, and resampling together.

These functions produce plain row/summary structures that the command
line serializes. They are importable on their own, so the full pipeline
can be driven from tests or notebooks without touching the filesystem
conventions of the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import Corpus, LayoutConfig, parse_corpus
from .encoding import BlockSegmentation, SymbolSequence, encode_text, segment_blocks
from .errors import DataError
from .markov import (
    WhichCF,
    count_ngrams,
    fit_sequence,
    dispersion_report,
    sequence_report,
    simulate_sequence,
    trigram_discrepancy,
)
from .resample import (
    STREAM_SIM,
    Interval,
    MbbConfig,
    derived_rng,
    mbb_replicate,
    percentile_interval,
)
from .schemes import EncodingScheme
from .stats import autocorrelation, ljung_box_test, partial_spearman, white_noise_band


@dataclass
class LoadedSource:
    label: str
    corpus: Corpus
    sequence: SymbolSequence
    segmentation: BlockSegmentation


def load_source(
    text: str,
    layout: LayoutConfig,
    scheme: EncodingScheme,
    *,
    label: str,
    block_len: int = 10_000,
    keep_partial: bool = True,
    min_partial: int = 1,
    unknown_policy: str = "error",
    include_epigraphs: bool = False,
) -> LoadedSource:
    corpus = parse_corpus(text, layout, scheme=scheme, source_id=label)
    seq = encode_text(
        corpus, scheme, policy=unknown_policy, include_epigraphs=include_epigraphs
    )
    if len(seq) == 0:
        raise DataError(f"source {label!r} encodes to an empty symbol sequence")
    segmentation = segment_blocks(
        seq, block_len, keep_partial=keep_partial, min_partial=min_partial
    )
    if len(segmentation) == 0:
        raise DataError(
            f"source {label!r}: {len(seq)} symbols yield no analysis blocks "
            f"(block_len={block_len}, keep_partial={keep_partial})"
        )
    return LoadedSource(label=label, corpus=corpus, sequence=seq, segmentation=segmentation)


PROFILE_COLUMNS = (
    "source", "block", "n", "p", "q", "p0", "p1", "q0", "q1",
    "p00", "p01", "p10", "p11", "q00", "q11",
    "d", "eta", "nu", "cf_simple", "cf_complex", "md",
    "var_independent", "var_dependent",
)


def profile_rows(source: LoadedSource, which_cf: WhichCF = "complex") -> list[tuple]:
    """One row per block: fitted parameters plus the dispersion report."""
    rows = []
    for b in range(len(source.segmentation)):
        x = source.segmentation.slice(source.sequence, b)
        two, four = fit_sequence(x)
        rep = dispersion_report(two, four, n=x.size, which_cf=which_cf)
        rows.append((
            source.label, b + 1, x.size, two.p, two.q, two.p0, two.p1, two.q0, two.q1,
            four.p00, four.p01, four.p10, four.p11, four.q00, four.q11,
            rep.d, rep.eta, rep.nu, rep.cf_simple, rep.cf_complex, rep.md,
            rep.var_independent, rep.var_dependent,
        ))
    return rows


CORRELATION_VARIABLES = ("p", "p0", "p1", "q00", "p11")


def md_parameter_correlations(
    source: LoadedSource,
    which_cf: WhichCF = "complex",
    control_set: str = "block",
) -> list[tuple]:
    """Partial Spearman of MD against each model parameter across blocks.

    ``control_set`` "block" partials out the block position; "none" uses
    plain correlations. Rows: (source, variable, rho, p_value, n, method,
    controls).
    """
    if control_set not in ("block", "none"):
        raise ValueError(f"control_set must be 'block' or 'none', got {control_set!r}")
    mds = []
    columns: dict[str, list[float]] = {v: [] for v in CORRELATION_VARIABLES}
    for b in range(len(source.segmentation)):
        x = source.segmentation.slice(source.sequence, b)
        two, four = fit_sequence(x)
        rep = dispersion_report(two, four, n=x.size, which_cf=which_cf)
        mds.append(rep.md)
        columns["p"].append(two.p)
        columns["p0"].append(two.p0)
        columns["p1"].append(two.p1)
        columns["q00"].append(four.q00)
        columns["p11"].append(four.p11)
    blocks = list(range(1, len(mds) + 1))
    controls = [blocks] if control_set == "block" else []
    names = ["block"] if control_set == "block" else None
    rows = []
    for var in CORRELATION_VARIABLES:
        res = partial_spearman(columns[var], mds, controls, names=names)
        rows.append((
            source.label, var, res.rho, res.p_value, res.n, res.method,
            ";".join(res.controlled_for),
        ))
    return rows


@dataclass
class BlockBootstrap:
    block: int
    n: int
    point_md: float
    point_cf_simple: float
    point_cf_complex: float
    md: np.ndarray
    cf_simple: np.ndarray
    cf_complex: np.ndarray
    md_interval: Interval
    cf_simple_interval: Interval
    cf_complex_interval: Interval


def bootstrap_blocks(
    source: LoadedSource,
    cfg: MbbConfig,
    *,
    level: float = 0.95,
    which_cf: WhichCF = "complex",
    source_index: int = 0,
) -> list[BlockBootstrap]:
    """MBB replicate distributions of CF and MD for every block."""
    out = []
    for b in range(len(source.segmentation)):
        x = source.segmentation.slice(source.sequence, b)
        point = sequence_report(x, which_cf=which_cf)
        md = np.empty(cfg.n_replicates)
        cf_s = np.empty(cfg.n_replicates)
        cf_c = np.empty(cfg.n_replicates)
        for r in range(cfg.n_replicates):
            rep = mbb_replicate(x, cfg, r, block_index=b, source_index=source_index)
            report = sequence_report(rep, which_cf=which_cf)
            md[r] = report.md
            cf_s[r] = report.cf_simple
            cf_c[r] = report.cf_complex
        out.append(BlockBootstrap(
            block=b + 1,
            n=x.size,
            point_md=point.md,
            point_cf_simple=point.cf_simple,
            point_cf_complex=point.cf_complex,
            md=md,
            cf_simple=cf_s,
            cf_complex=cf_c,
            md_interval=percentile_interval(md, level),
            cf_simple_interval=percentile_interval(cf_s, level),
            cf_complex_interval=percentile_interval(cf_c, level),
        ))
    return out


@dataclass
class BlockAcf:
    block: int
    n: int
    lags: np.ndarray
    rho: np.ndarray
    band_lo: np.ndarray      # MBB percentile band, first ci_lags lags
    band_hi: np.ndarray
    white_noise: float
    lb_statistic: float
    lb_p_value: float
    lb_h: int


def acf_blocks(
    source: LoadedSource,
    cfg: MbbConfig,
    *,
    max_lag: int = 10,
    ci_lags: int = 5,
    lb_h: int = 10,
    level: float = 0.95,
    source_index: int = 0,
) -> list[BlockAcf]:
    """Per-block ACF with Ljung-Box test and MBB bands on the first lags."""
    if ci_lags > max_lag:
        raise ValueError("ci_lags cannot exceed max_lag")
    out = []
    for b in range(len(source.segmentation)):
        x = source.segmentation.slice(source.sequence, b)
        acf = autocorrelation(x, max_lag)
        lb = ljung_box_test(acf, lb_h)
        reps = np.empty((cfg.n_replicates, ci_lags))
        for r in range(cfg.n_replicates):
            rep = mbb_replicate(x, cfg, r, block_index=b, source_index=source_index)
            reps[r] = autocorrelation(rep, ci_lags).rho
        lo = np.empty(ci_lags)
        hi = np.empty(ci_lags)
        for k in range(ci_lags):
            iv = percentile_interval(reps[:, k], level)
            lo[k], hi[k] = iv.lo, iv.hi
        out.append(BlockAcf(
            block=b + 1,
            n=x.size,
            lags=acf.lags,
            rho=acf.rho,
            band_lo=lo,
            band_hi=hi,
            white_noise=white_noise_band(x.size),
            lb_statistic=lb.statistic,
            lb_p_value=lb.p_value,
            lb_h=lb.h,
        ))
    return out


@dataclass
class SimulationSummary:
    model_block: int
    n_simulations: int
    sim_length: int
    empirical_md: float
    md: np.ndarray
    discrepancy: np.ndarray
    md_interval: Interval
    discrepancy_median: float
    discrepancy_interval: Interval
    median_interval: Interval


def simulation_ensemble(
    source: LoadedSource,
    *,
    n_simulations: int = 500,
    sim_length: int = 10_000,
    master_seed: int = 0,
    model_block: int = 0,
    which_cf: WhichCF = "complex",
    level: float = 0.95,
    source_index: int = 0,
) -> SimulationSummary:
    """Fit a block, simulate an ensemble, and compare it with the block.

    Each simulation gets its own derived generator, indexed by simulation
    number, and contributes its memory depth and the trigram discrepancy
    against the empirical block. The median discrepancy also carries a
    bootstrap interval (resampled medians over the ensemble).
    """
    if not 0 <= model_block < len(source.segmentation):
        raise ValueError(
            f"model_block {model_block} outside 0..{len(source.segmentation) - 1}"
        )
    x = source.segmentation.slice(source.sequence, model_block)
    _, four = fit_sequence(x)
    empirical = sequence_report(x, which_cf=which_cf)
    emp_tri = count_ngrams(x, 3)
    md = np.empty(n_simulations)
    disc = np.empty(n_simulations)
    for s in range(n_simulations):
        rng = derived_rng(master_seed, STREAM_SIM, source_index, model_block, s)
        sim = simulate_sequence(four, sim_length, rng)
        md[s] = sequence_report(sim, which_cf=which_cf).md
        disc[s] = trigram_discrepancy(emp_tri, count_ngrams(sim, 3))
    boot_rng = derived_rng(master_seed, STREAM_SIM, source_index, model_block, n_simulations)
    medians = np.median(
        disc[boot_rng.integers(0, n_simulations, size=(1000, n_simulations))], axis=1
    )
    return SimulationSummary(
        model_block=model_block + 1,
        n_simulations=n_simulations,
        sim_length=sim_length,
        empirical_md=empirical.md,
        md=md,
        discrepancy=disc,
        md_interval=percentile_interval(md, level),
        discrepancy_median=float(np.median(disc)),
        discrepancy_interval=percentile_interval(disc, level),
        median_interval=percentile_interval(medians, level),
    )


def blocks_by_label(sources: Sequence[LoadedSource]) -> dict[str, list[np.ndarray]]:
    return {
        src.label: [
            src.segmentation.slice(src.sequence, b)
            for b in range(len(src.segmentation))
        ]
        for src in sources
    }
