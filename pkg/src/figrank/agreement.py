"""Inter-annotator agreement via Krippendorff's alpha with the ordinal metric.

Every (paper, figure) pair is a unit.  An annotator's value for a unit is the
figure's 1-based position in their ranking, or the unranked category (one past
the deepest rank) when the figure was left out.  Only units rated by at least
two annotators enter the coincidence matrix.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import GoldAnnotation

MAX_RANK = 3
UNRANKED_VALUE = MAX_RANK + 1


def unit_values(
    annotations: Sequence[GoldAnnotation],
    figures_by_paper: Mapping[str, Sequence[str]],
) -> dict[tuple[str, str], list[int]]:
    """Collect each unit's rated values across annotators.

    Unranked figures get UNRANKED_VALUE, so the paper's full figure list is
    required; rankings must stay within it.
    """
    values: dict[tuple[str, str], list[int]] = defaultdict(list)
    for ann in annotations:
        figures = figures_by_paper.get(ann.paper_id)
        if figures is None:
            raise ValueError(f"no figure list for annotated paper {ann.paper_id!r}")
        if len(ann.ranking) > MAX_RANK:
            raise ValueError(
                f"annotation for paper {ann.paper_id!r} ranks {len(ann.ranking)} figures (max {MAX_RANK})"
            )
        unknown = set(ann.ranking).difference(figures)
        if unknown:
            raise ValueError(
                f"annotation for paper {ann.paper_id!r} ranks unknown figures: {sorted(unknown)}"
            )
        rank_of = {fid: position for position, fid in enumerate(ann.ranking, start=1)}
        for fid in figures:
            values[(ann.paper_id, fid)].append(rank_of.get(fid, UNRANKED_VALUE))
    return dict(values)


@dataclass
class AgreementReport:
    alpha: float
    unit_count: int
    paper_count: int
    annotator_count: int
    coincidence_marginals: dict[int, float]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "unit_count": self.unit_count,
            "paper_count": self.paper_count,
            "annotator_count": self.annotator_count,
            "coincidence_marginals": {
                str(value): count for value, count in sorted(self.coincidence_marginals.items())
            },
        }


def _ordinal_delta_squared(
    categories: Sequence[int], marginals: Mapping[int, float], c: int, d: int
) -> float:
    lo, hi = (c, d) if c <= d else (d, c)
    between = sum(marginals[g] for g in categories if lo <= g <= hi)
    return (between - (marginals[lo] + marginals[hi]) / 2.0) ** 2


def krippendorff_alpha(
    annotations: Sequence[GoldAnnotation],
    figures_by_paper: Mapping[str, Sequence[str]],
) -> float:
    """alpha = 1 - (n-1) * sum o_cd * delta2 / sum n_c n_d * delta2 over c<d."""
    return compute_agreement(annotations, figures_by_paper).alpha


def compute_agreement(
    annotations: Sequence[GoldAnnotation],
    figures_by_paper: Mapping[str, Sequence[str]],
) -> AgreementReport:
    all_values = unit_values(annotations, figures_by_paper)
    multi = {unit: vals for unit, vals in all_values.items() if len(vals) >= 2}
    if not multi:
        raise ValueError("no unit was rated by two or more annotators")

    categories = sorted({v for vals in multi.values() for v in vals})
    coincidence: dict[tuple[int, int], float] = defaultdict(float)
    for vals in multi.values():
        m = len(vals)
        for i, c in enumerate(vals):
            for j, d in enumerate(vals):
                if i != j:
                    coincidence[(c, d)] += 1.0 / (m - 1)
    marginals = {
        c: sum(coincidence[(c, d)] for d in categories) for c in categories
    }
    n_total = sum(marginals.values())

    observed = 0.0
    expected = 0.0
    for a, c in enumerate(categories):
        for d in categories[a + 1 :]:
            delta2 = _ordinal_delta_squared(categories, marginals, c, d)
            observed += coincidence[(c, d)] * delta2
            expected += marginals[c] * marginals[d] * delta2
    if expected == 0.0:
        raise ValueError("expected disagreement is zero; alpha is undefined")
    alpha = 1.0 - (n_total - 1.0) * observed / expected

    return AgreementReport(
        alpha=alpha,
        unit_count=len(multi),
        paper_count=len({paper for (paper, _fid) in multi}),
        annotator_count=len({ann.annotator_id for ann in annotations}),
        coincidence_marginals=marginals,
    )
