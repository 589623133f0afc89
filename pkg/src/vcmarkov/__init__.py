"""vcmarkov: vowel/consonant sequence statistics for literary corpora.

Parse structured poem text, encode it as a binary vowel/consonant stream,
fit low-order Markov chains per block, measure dispersion and memory
depth with block-bootstrap uncertainty, test trends against surrogate
nulls, and mine trigram probes with their lexical contexts.
"""

__version__ = "0.1.0"

from .corpus import (
    AlignedCorpus,
    Corpus,
    LayoutConfig,
    LineStats,
    TokenReport,
    align_corpora,
    extract_latin_tokens,
    line_statistics,
    load_layout,
    parse_corpus,
)
from .encoding import BlockSegmentation, SymbolSequence, encode_text, segment_blocks
from .errors import (
    DataError,
    DomainError,
    ParseError,
    UnknownCharacterError,
    ZeroContextError,
)
from .markov import (
    DispersionReport,
    FourStateModel,
    NgramCounts,
    TwoStateModel,
    count_ngrams,
    dispersion_report,
    fit_models,
    fit_sequence,
    sequence_report,
    simulate_sequence,
    stationary_bigram_distribution,
    trigram_discrepancy,
)
from .probes import (
    CategoryReport,
    CooccurrenceReport,
    ProbeCandidate,
    ProbeMatch,
    categorize_matches,
    name_cooccurrence,
    rank_letter_trigrams,
    scan_pattern_class,
    trigram_trend_table,
)
from .resample import (
    Interval,
    MbbConfig,
    derived_rng,
    make_surrogate,
    mbb_replicate,
    percentile_interval,
)
from .schemes import (
    DEFAULT_SCHEMES,
    ITALIAN,
    RUSSIAN,
    EncodingScheme,
    classify_char,
    dump_scheme,
    load_scheme,
)
from .stats import (
    AcfResult,
    LjungBoxResult,
    RegressionFit,
    SpearmanResult,
    autocorrelation,
    bootstrap_model_coefficients,
    fit_interaction_model,
    ljung_box_test,
    partial_spearman,
    spearman_test,
)

__all__ = [
    "__version__",
    "AlignedCorpus",
    "Corpus",
    "LayoutConfig",
    "LineStats",
    "TokenReport",
    "align_corpora",
    "extract_latin_tokens",
    "line_statistics",
    "load_layout",
    "parse_corpus",
    "BlockSegmentation",
    "SymbolSequence",
    "encode_text",
    "segment_blocks",
    "DataError",
    "DomainError",
    "ParseError",
    "UnknownCharacterError",
    "ZeroContextError",
    "DispersionReport",
    "FourStateModel",
    "NgramCounts",
    "TwoStateModel",
    "count_ngrams",
    "dispersion_report",
    "fit_models",
    "fit_sequence",
    "sequence_report",
    "simulate_sequence",
    "stationary_bigram_distribution",
    "trigram_discrepancy",
    "CategoryReport",
    "CooccurrenceReport",
    "ProbeCandidate",
    "ProbeMatch",
    "categorize_matches",
    "name_cooccurrence",
    "rank_letter_trigrams",
    "scan_pattern_class",
    "trigram_trend_table",
    "Interval",
    "MbbConfig",
    "derived_rng",
    "make_surrogate",
    "mbb_replicate",
    "percentile_interval",
    "DEFAULT_SCHEMES",
    "ITALIAN",
    "RUSSIAN",
    "EncodingScheme",
    "classify_char",
    "dump_scheme",
    "load_scheme",
    "AcfResult",
    "LjungBoxResult",
    "RegressionFit",
    "SpearmanResult",
    "autocorrelation",
    "bootstrap_model_coefficients",
    "fit_interaction_model",
    "ljung_box_test",
    "partial_spearman",
    "spearman_test",
]
