"""Per-method ranking and selection results.

One shape serves every method: a list of per-feature scores in rank order
plus the selected subset. Rankings serialize to CSV with columns
feature, score, rank, excluded_reason.
"""

import io
import csv
from dataclasses import dataclass, field


@dataclass(frozen=True)
class FeatureScore:
    feature: str
    score: float
    rank: int
    selected: bool
    excluded_reason: str = ""


@dataclass(frozen=True)
class SelectionResult:
    method: str
    scores: tuple  # FeatureScore, in rank order (rank 1 first)
    notes: tuple = field(default_factory=tuple)

    @property
    def selected(self):
        """Selected feature names, in rank order."""
        return tuple(s.feature for s in self.scores if s.selected)

    def score_of(self, feature):
        for s in self.scores:
            if s.feature == feature:
                return s
        raise KeyError(feature)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "score", "rank", "excluded_reason"])
        for s in self.scores:
            w.writerow([s.feature, repr(float(s.score)), s.rank, s.excluded_reason])
        return buf.getvalue()


def ranking_from_scores(method, names, values, selected_mask, excluded=None):
    """Build a SelectionResult from parallel name/score/selected sequences.

    Features are ordered by descending score with ties broken by input
    (column) order; entries listed in ``excluded`` (name -> reason) are
    ranked after everything else in column order.
    """
    excluded = excluded or {}
    keyed = []
    for j, name in enumerate(names):
        if name in excluded:
            keyed.append((1, 0.0, j, name))
        else:
            keyed.append((0, -float(values[j]), j, name))
    keyed.sort()
    rows = []
    for rank, (_, _, j, name) in enumerate(keyed, start=1):
        rows.append(
            FeatureScore(
                feature=name,
                score=float(values[j]),
                rank=rank,
                selected=bool(selected_mask[j]) and name not in excluded,
                excluded_reason=excluded.get(name, ""),
            )
        )
    return SelectionResult(method=method, scores=tuple(rows))
