"""Trigram probe mining: scan V/C classes, recover lexical contexts,
rank trigrams, test blockwise trends, attach categories, and relate
probe locations to character-name mentions.

Matching runs on the encoded sequence, where excluded characters are
already gone, so a trigram can span a word or line boundary. The origin
map carries matches back into the source text: the context is the span
bounded by the nearest whitespace around the matched letters (joined
with single spaces when the letters sit on several lines), with
non-letter characters trimmed from its ends. Characters that were
excluded from the encoding, hard and soft signs and apostrophes among
them, reappear inside the context because the context is cut from the
raw line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .corpus import Corpus, tokenize_words
from .encoding import BlockSegmentation, SymbolSequence
from .errors import DomainError
from .stats import SpearmanResult, spearman_test

PERSISTENT_CLASSES = ("VVV", "CCC")
ALTERNATING_CLASSES = ("VVC", "CCV")

_CLASS_LABELS = {"VVV": "persistent", "CCC": "persistent",
                 "VVC": "alternating", "CCV": "alternating"}

UNANNOTATED = "unannotated"
UNCATEGORIZED = "uncategorized"


@dataclass(frozen=True)
class ProbeMatch:
    letters: str
    vc_class: str
    context: str
    part_index: int
    stanza_index: int
    line_number: int
    single_word: bool
    block_index: int
    position: int

    @property
    def location(self) -> tuple[int, int, int]:
        return (self.part_index, self.stanza_index, self.line_number)


def pattern_kind(vc_class: str) -> str:
    return _CLASS_LABELS.get(vc_class, "other")


def _class_code(vc_class: str) -> int:
    if len(vc_class) != 3 or set(vc_class) - {"V", "C"}:
        raise ValueError(f"a trigram class is three V/C letters, got {vc_class!r}")
    code = 0
    for ch in vc_class:
        code = (code << 1) | (ch == "V")
    return code


def _expand_span(text: str, lo: int, hi: int) -> str:
    """Substring around [lo, hi] bounded by the nearest whitespace."""
    start = lo
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    end = hi + 1
    while end < len(text) and not text[end].isspace():
        end += 1
    return text[start:end]


def _trim_nonletters(s: str) -> str:
    start = 0
    end = len(s)
    while start < end and not s[start].isalpha():
        start += 1
    while end > start and not s[end - 1].isalpha():
        end -= 1
    return s[start:end]


def scan_pattern_class(
    seq: SymbolSequence,
    corpus: Corpus,
    classes: Iterable[str],
    *,
    segmentation: Optional[BlockSegmentation] = None,
    fold_case: bool = True,
) -> list[ProbeMatch]:
    """One ProbeMatch per overlapping trigram window whose class is wanted.

    ``block_index`` comes from the segmentation (or -1 without one, and -1
    for windows outside its coverage). ``single_word`` is true when all
    three letters sit inside one whitespace-delimited token.
    """
    if seq.origin is None:
        raise DomainError("probe scanning needs a sequence with an origin map")
    wanted = {_class_code(c) for c in classes}
    if not wanted:
        return []
    x = seq.symbols
    n = x.size
    if n < 3:
        return []
    codes = (x[: n - 2].astype(np.int64) << 2) | (x[1 : n - 1].astype(np.int64) << 1) | x[2:]
    hits = np.nonzero(np.isin(codes, sorted(wanted)))[0]
    origin = seq.origin
    matches: list[ProbeMatch] = []
    line_cache: dict[tuple[int, int, int], str] = {}

    def line_text(part: int, stanza: int, lineno: int) -> str:
        key = (part, stanza, lineno)
        text = line_cache.get(key)
        if text is None:
            text = corpus.stanza_at(part, stanza).lines[lineno - 1].text
            line_cache[key] = text
        return text

    for pos in hits.tolist():
        rows = [tuple(int(v) for v in origin[pos + j]) for j in range(3)]
        letters = "".join(
            line_text(p, s, ln)[off] for (p, s, ln, off) in rows
        )
        if fold_case:
            letters = letters.lower()
        # consecutive letters on one line share a context span
        groups: list[list[tuple[int, int, int, int]]] = []
        for row in rows:
            if groups and groups[-1][-1][:3] == row[:3]:
                groups[-1].append(row)
            else:
                groups.append([row])
        spans = []
        for group in groups:
            text = line_text(group[0][0], group[0][1], group[0][2])
            offsets = [r[3] for r in group]
            spans.append(_expand_span(text, min(offsets), max(offsets)))
        context = _trim_nonletters(" ".join(spans))
        if fold_case:
            context = context.lower()
        single_word = False
        if len(groups) == 1:
            text = line_text(rows[0][0], rows[0][1], rows[0][2])
            lo, hi = rows[0][3], rows[2][3]
            single_word = not any(text[i].isspace() for i in range(lo, hi + 1))
        matches.append(
            ProbeMatch(
                letters=letters,
                vc_class=_pattern3(codes[pos]),
                context=context,
                part_index=rows[0][0],
                stanza_index=rows[0][1],
                line_number=rows[0][2],
                single_word=single_word,
                block_index=segmentation.block_of(pos) if segmentation else -1,
                position=pos,
            )
        )
    return matches


def _pattern3(code: int) -> str:
    return "".join("V" if (int(code) >> (2 - j)) & 1 else "C" for j in range(3))


@dataclass(frozen=True)
class TrigramRank:
    letters: str
    count: int
    share: float
    zipf_rank: int


def rank_letter_trigrams(matches: Sequence[ProbeMatch]) -> list[TrigramRank]:
    """Frequency table of letter trigrams over the scanned match family.

    Shares divide by the total number of matches passed in; ranks are
    positional after sorting by descending count with lexicographic
    tie-breaking.
    """
    if not matches:
        raise ValueError("rank_letter_trigrams needs at least one match")
    counts: dict[str, int] = {}
    for m in matches:
        counts[m.letters] = counts.get(m.letters, 0) + 1
    total = len(matches)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [
        TrigramRank(letters=k, count=v, share=v / total, zipf_rank=i + 1)
        for i, (k, v) in enumerate(ordered)
    ]


@dataclass(frozen=True)
class ProbeCandidate:
    letters: str
    vc_class: str
    pattern_kind: str
    direction: str
    spearman_rho: float
    spearman_p: float
    zipf_rank: int
    share: float
    md_aligned: bool
    series: tuple[float, ...]


def _window_counts(segmentation: BlockSegmentation, order: int = 3) -> np.ndarray:
    return np.array(
        [max(length - order + 1, 1) for length in segmentation.lengths], dtype=float
    )


def trigram_trend_table(
    matches: Sequence[ProbeMatch],
    segmentation: BlockSegmentation,
    *,
    threshold: float = 0.05,
) -> list[ProbeCandidate]:
    """Letter trigrams whose blockwise relative frequency trends with
    position at significance below ``threshold``.

    The per-block series divides match counts by the number of trigram
    windows in the block. Direction is the sign of the Spearman rho, and
    ``md_aligned`` flags the combinations that point the same way as a
    declining memory depth: persistent trigrams rising or alternating
    trigrams falling. Trigrams with a constant series carry no trend and
    are never candidates.
    """
    if len(segmentation) < 3:
        raise ValueError("trend testing needs at least 3 blocks")
    if not matches:
        return []
    ranks = {r.letters: r for r in rank_letter_trigrams(matches)}
    windows = _window_counts(segmentation)
    positions = np.arange(1, len(segmentation) + 1, dtype=float)
    by_letters: dict[str, list[ProbeMatch]] = {}
    for m in matches:
        by_letters.setdefault(m.letters, []).append(m)
    candidates = []
    for letters in sorted(by_letters):
        group = by_letters[letters]
        counts = np.zeros(len(segmentation))
        for m in group:
            if m.block_index >= 0:
                counts[m.block_index] += 1
        series = counts / windows
        if np.all(series == series[0]):
            continue
        result = spearman_test(positions, series)
        if result.p_value >= threshold:
            continue
        direction = "increasing" if result.rho > 0 else "decreasing"
        kind = pattern_kind(group[0].vc_class)
        aligned = (kind == "persistent" and direction == "increasing") or (
            kind == "alternating" and direction == "decreasing"
        )
        rank = ranks[letters]
        candidates.append(
            ProbeCandidate(
                letters=letters,
                vc_class=group[0].vc_class,
                pattern_kind=kind,
                direction=direction,
                spearman_rho=result.rho,
                spearman_p=result.p_value,
                zipf_rank=rank.zipf_rank,
                share=rank.share,
                md_aligned=aligned,
                series=tuple(float(v) for v in series),
            )
        )
    candidates.sort(key=lambda c: (c.spearman_p, c.letters))
    return candidates


def context_key(context: str) -> str:
    """Normalization applied to contexts before annotation lookup."""
    return _trim_nonletters(context).casefold()


def load_annotation_csv(path: str) -> tuple[dict[str, str], dict[str, str]]:
    """Read a (context, lemma[, category]) CSV.

    Returns (annotations, categories): context key to lemma, and form key
    (lemma or context) to category for rows that carry one.
    """
    import csv

    annotations: dict[str, str] = {}
    categories: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "context" not in reader.fieldnames:
            raise ValueError(f"{path}: expected a header with a 'context' column")
        has_lemma = "lemma" in (reader.fieldnames or [])
        has_category = "category" in (reader.fieldnames or [])
        for row in reader:
            key = context_key(row["context"])
            if not key:
                continue
            lemma = (row.get("lemma") or "").strip() if has_lemma else ""
            if lemma:
                annotations[key] = lemma
            category = (row.get("category") or "").strip() if has_category else ""
            if category:
                categories[(lemma or key).casefold()] = category
    return annotations, categories


def load_name_forms_csv(path: str) -> dict[str, set[str]]:
    """Read a (character, form) CSV into per-character surface-form sets."""
    import csv

    forms: dict[str, set[str]] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"character", "form"}
        if reader.fieldnames is None or not needed <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected a header with 'character' and 'form'")
        for row in reader:
            name = (row["character"] or "").strip()
            form = (row["form"] or "").strip().casefold()
            if name and form:
                forms.setdefault(name, set()).add(form)
    return forms


@dataclass(frozen=True)
class LabeledMatch:
    match: ProbeMatch
    lemma: Optional[str]
    category: str


@dataclass(frozen=True)
class TrendTest:
    result: Optional[SpearmanResult]
    note: Optional[str] = None


@dataclass
class CategoryReport:
    labeled: list[LabeledMatch]
    counts: dict[str, int]
    series: dict[str, np.ndarray]
    tests: dict[str, TrendTest]


def categorize_matches(
    matches: Sequence[ProbeMatch],
    annotations: Mapping[str, str],
    categories: Mapping[str, str],
    segmentation: BlockSegmentation,
) -> CategoryReport:
    """Label matches with lemma and category, and test per-category trends.

    A context missing from the annotation table is labeled "unannotated";
    an annotated context whose lemma (or context) has no category becomes
    "uncategorized". Neither is dropped, so label counts always sum to the
    input count. Trend tests cover each category, the union of all real
    categories ("union"), and every input match ("all"); a test that
    cannot run reports its reason instead of a result.
    """
    ann = {context_key(k): v for k, v in annotations.items()}
    cat = {str(k).casefold(): v for k, v in categories.items()}
    labeled: list[LabeledMatch] = []
    for m in matches:
        key = context_key(m.context)
        lemma = ann.get(key)
        if lemma is None:
            labeled.append(LabeledMatch(match=m, lemma=None, category=UNANNOTATED))
            continue
        category = cat.get(lemma.casefold(), cat.get(key))
        labeled.append(
            LabeledMatch(match=m, lemma=lemma, category=category or UNCATEGORIZED)
        )

    counts: dict[str, int] = {}
    for lm in labeled:
        counts[lm.category] = counts.get(lm.category, 0) + 1

    n_blocks = len(segmentation)
    windows = _window_counts(segmentation)
    positions = np.arange(1, n_blocks + 1, dtype=float)

    def block_series(items: Iterable[LabeledMatch]) -> np.ndarray:
        raw = np.zeros(n_blocks)
        for lm in items:
            if lm.match.block_index >= 0:
                raw[lm.match.block_index] += 1
        return raw / windows

    real_categories = sorted(set(counts) - {UNANNOTATED, UNCATEGORIZED})
    series: dict[str, np.ndarray] = {}
    for label in real_categories:
        series[label] = block_series(lm for lm in labeled if lm.category == label)
    series["union"] = block_series(
        lm for lm in labeled if lm.category not in (UNANNOTATED, UNCATEGORIZED)
    )
    series["all"] = block_series(labeled)

    tests: dict[str, TrendTest] = {}
    for label, values in series.items():
        try:
            tests[label] = TrendTest(result=spearman_test(positions, values))
        except (DomainError, ValueError) as exc:
            tests[label] = TrendTest(result=None, note=str(exc))
    return CategoryReport(labeled=labeled, counts=counts, series=series, tests=tests)


@dataclass(frozen=True)
class CooccurrenceReport:
    total_name_mentions: int
    mentions_in_probe_stanzas: int
    mention_cooccurrence_fraction: float
    n_probe_stanzas: int
    n_probe_stanzas_thematic: int
    thematic_stanza_fraction: float
    correlation: Optional[SpearmanResult]
    correlation_note: Optional[str]
    thematic_categories: tuple[str, ...]
    definition: str = (
        "correlation of per-stanza name-mention counts against per-stanza "
        "thematic-match counts over probe-bearing stanzas"
    )


def name_cooccurrence(
    labeled_matches: Sequence[LabeledMatch],
    corpus: Corpus,
    name_forms: Union[Mapping[str, Iterable[str]], Sequence[Iterable[str]]],
    *,
    thematic_categories: Optional[Iterable[str]] = None,
    include_epigraphs: bool = False,
) -> CooccurrenceReport:
    """Relate probe locations to character-name mentions, stanza by stanza.

    Name mentions are case-folded whole-word hits of any supplied surface
    form. The correlation is computed over stanzas holding at least one
    probe match; when it cannot be computed (fewer than 3 such stanzas, or
    a constant side) the report says why instead of failing.
    """
    if isinstance(name_forms, Mapping):
        form_sets = list(name_forms.values())
    else:
        form_sets = list(name_forms)
    all_forms: set[str] = set()
    for fs in form_sets:
        all_forms.update(str(f).casefold() for f in fs)
    if not all_forms:
        raise ValueError("name_forms is empty: no surface forms to look for")

    if thematic_categories is None:
        thematic = {
            lm.category
            for lm in labeled_matches
            if lm.category not in (UNANNOTATED, UNCATEGORIZED)
        }
    else:
        thematic = set(thematic_categories)

    mentions: dict[tuple[int, int], int] = {}
    total_mentions = 0
    for pi, si, _, line in corpus.iter_lines(include_epigraphs=include_epigraphs):
        hits = sum(1 for w in tokenize_words(line.text) if w.casefold() in all_forms)
        if hits:
            mentions[(pi, si)] = mentions.get((pi, si), 0) + hits
            total_mentions += hits

    probe_counts: dict[tuple[int, int], int] = {}
    thematic_counts: dict[tuple[int, int], int] = {}
    for lm in labeled_matches:
        key = (lm.match.part_index, lm.match.stanza_index)
        probe_counts[key] = probe_counts.get(key, 0) + 1
        if lm.category in thematic:
            thematic_counts[key] = thematic_counts.get(key, 0) + 1

    probe_stanzas = sorted(probe_counts)
    mentions_in_probe = sum(mentions.get(k, 0) for k in probe_stanzas)
    n_thematic_stanzas = sum(1 for k in probe_stanzas if thematic_counts.get(k, 0) > 0)

    correlation: Optional[SpearmanResult] = None
    note: Optional[str] = None
    if len(probe_stanzas) < 3:
        note = f"only {len(probe_stanzas)} probe-bearing stanzas; need at least 3"
    else:
        x = [mentions.get(k, 0) for k in probe_stanzas]
        y = [thematic_counts.get(k, 0) for k in probe_stanzas]
        try:
            correlation = spearman_test(x, y)
        except DomainError as exc:
            note = str(exc)

    return CooccurrenceReport(
        total_name_mentions=total_mentions,
        mentions_in_probe_stanzas=mentions_in_probe,
        mention_cooccurrence_fraction=(
            mentions_in_probe / total_mentions if total_mentions else 0.0
        ),
        n_probe_stanzas=len(probe_stanzas),
        n_probe_stanzas_thematic=n_thematic_stanzas,
        thematic_stanza_fraction=(
            n_thematic_stanzas / len(probe_stanzas) if probe_stanzas else 0.0
        ),
        correlation=correlation,
        correlation_note=note,
        thematic_categories=tuple(sorted(thematic)),
    )
