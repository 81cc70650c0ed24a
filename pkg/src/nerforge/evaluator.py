"""Span-based scoring: micro P/R/F1, per-type breakdowns, uniform macro F1.

A predicted span counts as a true positive iff an identical
(start, end, type) span exists in the same sentence's gold set.  Precision
and recall are 0 when their denominators are 0, and F1 is 0 unless tp > 0;
the conventions matter only for degenerate inputs and are pinned here so
scores are reproducible.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Collection, Mapping, Sequence

from .types import EntitySpan


@dataclass(frozen=True)
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def _count(
    gold: Sequence[Collection[EntitySpan]],
    pred: Sequence[Collection[EntitySpan]],
) -> dict[str, PRF]:
    if len(gold) != len(pred):
        raise ValueError(
            f"gold has {len(gold)} sentences but pred has {len(pred)}; "
            "scoring requires aligned sentences"
        )
    counts: dict[str, list[int]] = defaultdict(lambda: [0, 0, 0])
    for g_sent, p_sent in zip(gold, pred):
        g_set, p_set = set(g_sent), set(p_sent)
        for span in g_set & p_set:
            counts[span.etype][0] += 1
        for span in p_set - g_set:
            counts[span.etype][1] += 1
        for span in g_set - p_set:
            counts[span.etype][2] += 1
    return {etype: PRF(*c) for etype, c in sorted(counts.items())}


def score_flat(
    gold: Sequence[Collection[EntitySpan]],
    pred: Sequence[Collection[EntitySpan]],
) -> tuple[PRF, dict[str, PRF]]:
    """Micro P/R/F1 over exact span matches, plus the per-type breakdown."""
    per_type = _count(gold, pred)
    total = PRF()
    for prf in per_type.values():
        total = total + prf
    return total, per_type


def score_nested(
    gold: Sequence[Collection[EntitySpan]],
    pred: Sequence[Collection[EntitySpan]],
) -> PRF:
    """Micro P/R/F1 for nested span sets; same matching rule as score_flat."""
    return score_flat(gold, pred)[0]


def macro_f1(per_corpus_f1: Sequence[float]) -> float:
    """Unweighted mean of per-corpus F1 scores (the model-selection objective)."""
    if not per_corpus_f1:
        raise ValueError("macro_f1 needs at least one corpus score")
    return sum(per_corpus_f1) / len(per_corpus_f1)


def report_lines(per_corpus: Mapping[str, tuple[PRF, Mapping[str, PRF]]]) -> list[str]:
    """Machine-readable report: one tab-separated record per (corpus, type)."""
    lines = []
    for corpus, (total, per_type) in per_corpus.items():
        rows = [("ALL", total)] + list(per_type.items())
        for etype, prf in rows:
            lines.append(
                f"{corpus}\t{etype}\t{prf.tp}\t{prf.fp}\t{prf.fn}"
                f"\t{prf.precision:.6f}\t{prf.recall:.6f}\t{prf.f1:.6f}"
            )
    return lines


def render_report(per_corpus: Mapping[str, tuple[PRF, Mapping[str, PRF]]]) -> str:
    """Human-readable table of the same numbers as report_lines."""
    header = f"{'corpus':<16} {'type':<12} {'tp':>6} {'fp':>6} {'fn':>6} {'P':>8} {'R':>8} {'F1':>8}"
    out = [header, "-" * len(header)]
    for corpus, (total, per_type) in per_corpus.items():
        for etype, prf in [("ALL", total)] + list(per_type.items()):
            out.append(
                f"{corpus:<16} {etype:<12} {prf.tp:>6} {prf.fp:>6} {prf.fn:>6}"
                f" {prf.precision:>8.4f} {prf.recall:>8.4f} {prf.f1:>8.4f}"
            )
    return "\n".join(out)
