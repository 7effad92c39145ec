"""Paired evaluation: joint pair outcomes, derived metrics, exact McNemar test.

Each evaluated pair couples a vulnerable function with its fixed benign
counterpart.  The joint prediction falls into exactly one of four outcomes:

* PC: both functions classified correctly;
* PV: both predicted vulnerable;
* PB: both predicted benign;
* PR: the two labels swapped.

Treating vulnerable as the positive class, the function-level confusion
counts follow algebraically: TP = PC+PV, FN = PB+PR, FP = PV+PR, TN = PC+PB
(in pair units), from which precision, recall, FPR, accuracy, and F1 derive.
Undefined ratios are reported as NaN, never silently zero.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .errors import MissingPredictionError

__all__ = [
    "PairRecord",
    "PairOutcome",
    "MetricsReport",
    "classify_pair",
    "tally_outcomes",
    "compute_metrics",
    "mcnemar_exact",
    "sample_pairs",
]


@dataclass(frozen=True)
class PairRecord:
    pair_id: str
    vulnerable_id: str
    benign_id: str


class PairOutcome(str, Enum):
    PC = "PC"
    PV = "PV"
    PB = "PB"
    PR = "PR"


@dataclass
class MetricsReport:
    pc: int
    pv: int
    pb: int
    pr: int
    error: int
    precision: float
    recall: float
    fpr: float
    accuracy: float
    f1: float

    @property
    def pairs(self) -> int:
        return self.pc + self.pv + self.pb + self.pr

    def as_dict(self) -> dict:
        def scalar(x: float):
            return None if isinstance(x, float) and math.isnan(x) else x

        return {
            "P-C": self.pc,
            "P-V": self.pv,
            "P-B": self.pb,
            "P-R": self.pr,
            "Error": self.error,
            "P": scalar(self.precision),
            "R": scalar(self.recall),
            "FPR": scalar(self.fpr),
            "Acc": scalar(self.accuracy),
            "F1": scalar(self.f1),
        }


def classify_pair(pred_for_vulnerable: str | None, pred_for_benign: str | None) -> PairOutcome:
    """Joint outcome of the predictions for one (vulnerable, benign) pair."""
    if pred_for_vulnerable is None or pred_for_benign is None:
        raise MissingPredictionError("both members of a pair need a prediction")
    v_hit = pred_for_vulnerable == "vulnerable"
    b_hit = pred_for_benign == "benign"
    if v_hit and b_hit:
        return PairOutcome.PC
    if v_hit and not b_hit:
        return PairOutcome.PV
    if not v_hit and b_hit:
        return PairOutcome.PB
    return PairOutcome.PR


def tally_outcomes(outcomes: list[PairOutcome]) -> tuple[int, int, int, int]:
    pc = sum(1 for o in outcomes if o is PairOutcome.PC)
    pv = sum(1 for o in outcomes if o is PairOutcome.PV)
    pb = sum(1 for o in outcomes if o is PairOutcome.PB)
    pr = sum(1 for o in outcomes if o is PairOutcome.PR)
    return pc, pv, pb, pr


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else float("nan")


def compute_metrics(pc: int, pv: int, pb: int, pr: int) -> MetricsReport:
    """Derive the metric suite from the four pair-outcome counts."""
    pairs = pc + pv + pb + pr
    if pairs < 1:
        raise ValueError("need at least one evaluated pair")
    tp = pc + pv
    fn = pb + pr
    fp = pv + pr
    tn = pc + pb
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    fpr = _ratio(fp, fp + tn)
    accuracy = _ratio(tp + tn, 2 * pairs)
    f1 = (
        _ratio(2 * precision * recall, precision + recall)
        if not (math.isnan(precision) or math.isnan(recall))
        else float("nan")
    )
    return MetricsReport(
        pc=pc,
        pv=pv,
        pb=pb,
        pr=pr,
        error=pairs - pc,
        precision=precision,
        recall=recall,
        fpr=fpr,
        accuracy=accuracy,
        f1=f1,
    )


def mcnemar_exact(
    preds_a: list[str], preds_b: list[str], labels: list[str]
) -> float:
    """Exact two-sided McNemar test on discordant predictions.

    With b = (A correct, B wrong) and c = (A wrong, B correct), the p-value is
    min(1, 2 * BinomCDF(min(b, c); b + c, 0.5)), computed with exact integer
    arithmetic.  No discordant pairs give p = 1 by convention.
    """
    if not (len(preds_a) == len(preds_b) == len(labels)):
        raise ValueError("prediction vectors and labels must align")
    b = c = 0
    for pa, pb_, label in zip(preds_a, preds_b, labels):
        a_ok = pa == label
        b_ok = pb_ == label
        if a_ok and not b_ok:
            b += 1
        elif b_ok and not a_ok:
            c += 1
    n = b + c
    if n == 0:
        return 1.0
    m = min(b, c)
    tail = sum(math.comb(n, i) for i in range(m + 1))
    p = 2 * Fraction(tail, 2**n)
    return float(min(p, Fraction(1)))


def sample_pairs(pairs: list[PairRecord], fraction: float, seed: int) -> list[PairRecord]:
    """Seeded uniform sample of pairs for budgeted evaluation."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    if fraction == 1:
        return list(pairs)
    count = max(1, round(len(pairs) * fraction))
    rng = random.Random(seed)
    picked = rng.sample(range(len(pairs)), min(count, len(pairs)))
    return [pairs[i] for i in sorted(picked)]
