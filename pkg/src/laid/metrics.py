"""Classification metrics, efficiency ratios and the clean / adversarial /
fusion testing protocols.

Label 1 is the synthetic (AI-generated) class and is the positive class.
"""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError, UndefinedMetricError, UnsupportedMetricError

THRESHOLD = 0.5


class Domain(enum.Enum):
    SPATIAL = "spatial"
    SPECTRAL = "spectral"


class Setting(enum.Enum):
    CLEAN = "clean"
    ADV_SPATIAL = "adv_spatial"
    ADV_SPECTRAL = "adv_spectral"
    ADV_FUSION = "adv_fusion"
    CLEAN_FUSION = "clean_fusion"


@dataclass(frozen=True)
class PredictionRecord:
    """One evaluated sample: both detectors' positive-class scores and the truth."""

    score_p: float
    score_f: float
    g: int

    def __post_init__(self):
        if self.g not in (0, 1):
            raise ParameterError("ground truth must be 0 or 1")

    @property
    def y_p(self) -> int:
        return int(self.score_p >= THRESHOLD)

    @property
    def y_f(self) -> int:
        return int(self.score_f >= THRESHOLD)


@dataclass(frozen=True)
class Records:
    """Column-oriented prediction records for one evaluated sample set."""

    score_p: np.ndarray
    score_f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        for name in ("score_p", "score_f", "g"):
            object.__setattr__(self, name, np.asarray(getattr(self, name)))
        if not (self.score_p.shape == self.score_f.shape == self.g.shape) or self.g.ndim != 1:
            raise ParameterError("record columns must be 1D and equally long")
        if not np.all((self.g == 0) | (self.g == 1)):
            raise ParameterError("ground truth must be 0 or 1")

    @classmethod
    def from_labels(cls, y_p, y_f, g) -> "Records":
        """Records from hard predictions (scores set to the predicted label)."""
        return cls(np.asarray(y_p, dtype=float), np.asarray(y_f, dtype=float), np.asarray(g))

    @classmethod
    def from_rows(cls, rows) -> "Records":
        rows = list(rows)
        return cls(np.array([r.score_p for r in rows], dtype=float),
                   np.array([r.score_f for r in rows], dtype=float),
                   np.array([r.g for r in rows], dtype=np.int64))

    def rows(self) -> list[PredictionRecord]:
        return [PredictionRecord(float(p), float(f), int(g))
                for p, f, g in zip(self.score_p, self.score_f, self.g)]

    def __len__(self):
        return self.g.shape[0]

    @property
    def y_p(self) -> np.ndarray:
        return (self.score_p >= THRESHOLD).astype(np.int64)

    @property
    def y_f(self) -> np.ndarray:
        return (self.score_f >= THRESHOLD).astype(np.int64)

    def scores(self, domain: Domain) -> np.ndarray:
        return self.score_p if Domain(domain) is Domain.SPATIAL else self.score_f

    def predictions(self, domain: Domain) -> np.ndarray:
        return self.y_p if Domain(domain) is Domain.SPATIAL else self.y_f


def accuracy(records: Records, domain: Domain = Domain.SPATIAL) -> float:
    if len(records) == 0:
        raise ParameterError("no records")
    return 100.0 * float(np.mean(records.predictions(domain) == records.g))


def f1_score(records: Records, domain: Domain = Domain.SPATIAL) -> float:
    pred, g = records.predictions(domain), records.g
    tp = int(np.sum((pred == 1) & (g == 1)))
    fp = int(np.sum((pred == 1) & (g == 0)))
    fn = int(np.sum((pred == 0) & (g == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def auc_roc(records: Records, domain: Domain = Domain.SPATIAL) -> float:
    """Mann-Whitney U over average ranks (ties count one half)."""
    s = records.scores(domain).astype(np.float64)
    g = records.g
    n_pos = int(g.sum())
    n_neg = len(g) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC-ROC needs both classes present")
    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    ranks = np.empty(len(s), dtype=np.float64)
    # average 1-based rank over each run of tied scores
    bounds = np.flatnonzero(np.diff(sorted_s)) + 1
    starts = np.concatenate(([0], bounds))
    ends = np.concatenate((bounds, [len(s)]))
    for a, b in zip(starts, ends):
        ranks[order[a:b]] = (a + b + 1) / 2.0
    u = ranks[g == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def efficiency_ratios(accuracy_pct: float, params: float, flops: float) -> tuple[float, float]:
    """(accuracy per million parameters, accuracy per MFLOP)."""
    if params <= 0 or flops <= 0:
        raise ParameterError("params and flops must be positive")
    return accuracy_pct / (params / 1e6), accuracy_pct / (flops / 1e6)


def fusion_success(record: PredictionRecord) -> bool:
    """OR rule: either domain's decision matches the ground truth."""
    return record.y_p == record.g or record.y_f == record.g


def fusion_accuracy(records: Records) -> float:
    if len(records) == 0:
        raise ParameterError("no records")
    ok = (records.y_p == records.g) | (records.y_f == records.g)
    return 100.0 * float(np.mean(ok))


@dataclass
class EvalReport:
    setting: str
    n: int
    accuracy: float
    f1: float | None = None
    auc_roc: float | None = None
    acc_per_mparams: float | None = None
    acc_per_mflops: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def to_text(self) -> str:
        def fmt(v, spec):
            return "-" if v is None else format(v, spec)
        return (f"{self.setting:<22} n={self.n:<6} acc={self.accuracy:7.2f}%  "
                f"f1={fmt(self.f1, '.4f')}  auc={fmt(self.auc_roc, '.4f')}  "
                f"acc/Mparams={fmt(self.acc_per_mparams, '.2f')}  "
                f"acc/MFLOPs={fmt(self.acc_per_mflops, '.4f')}")


_SETTING_DOMAIN = {
    Setting.CLEAN: Domain.SPATIAL,
    Setting.ADV_SPATIAL: Domain.SPATIAL,
    Setting.ADV_SPECTRAL: Domain.SPECTRAL,
}


def evaluate_protocol(records: Records, setting: Setting, domain: Domain | None = None,
                      cost=None, with_scores: bool | None = None) -> EvalReport:
    """Score ``records`` under one testing setting.

    CLEAN evaluates ``domain`` (spatial unless given). Fusion settings use the
    OR rule and report accuracy only; requesting F1/AUC for them raises.
    ``cost`` is any object with ``params`` and ``flops`` (e.g. a CostReport).
    """
    setting = Setting(setting)
    if setting in (Setting.ADV_FUSION, Setting.CLEAN_FUSION):
        if with_scores or domain is not None:
            raise UnsupportedMetricError("fusion is decision-level: no single score or domain")
        return EvalReport(setting.value, len(records), fusion_accuracy(records))
    dom = Domain(domain) if domain is not None else _SETTING_DOMAIN[setting]
    acc = accuracy(records, dom)
    name = f"clean_{dom.value}" if setting is Setting.CLEAN else setting.value
    report = EvalReport(name, len(records), acc)
    if with_scores is not False:
        report.f1 = f1_score(records, dom)
        if 0 < int(records.g.sum()) < len(records):
            report.auc_roc = auc_roc(records, dom)
    if cost is not None:
        report.acc_per_mparams, report.acc_per_mflops = efficiency_ratios(acc, cost.params, cost.flops)
    return report
