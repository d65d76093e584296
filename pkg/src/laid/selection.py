"""Constraint filtering and efficiency-score ranking of candidate models."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError, ParameterError

MAX_PARAMS = 10**7
MAX_FLOPS = 10**9


@dataclass(frozen=True)
class CandidateModel:
    name: str
    family: str
    top1_acc: float
    params: float
    flops: float

    def __post_init__(self):
        if not 0 < self.top1_acc <= 100:
            raise ParameterError(f"{self.name}: top1_acc {self.top1_acc} not in (0, 100]")
        if self.params <= 0 or self.flops <= 0:
            raise ParameterError(f"{self.name}: params and flops must be positive")


@dataclass(frozen=True)
class EfficiencyWeights:
    lambda1: float = 0.5
    lambda2: float = 0.25
    lambda3: float = 0.25

    def __post_init__(self):
        lams = (self.lambda1, self.lambda2, self.lambda3)
        if min(lams) < 0 or max(lams) <= 0:
            raise ParameterError(f"weights must be non-negative with one positive: {lams}")

    @classmethod
    def parse(cls, text: str) -> "EfficiencyWeights":
        vals = [float(v) for v in text.split(",")]
        if len(vals) != 3:
            raise ParameterError(f"expected three comma-separated weights, got {text!r}")
        return cls(*vals)


def constraint_filter(pool):
    """Keep models under the parameter budget OR under the FLOP budget."""
    return [m for m in pool if m.params < MAX_PARAMS or m.flops < MAX_FLOPS]


def efficiency_score(m: CandidateModel, pool, w: EfficiencyWeights = EfficiencyWeights()) -> float:
    """Weighted sum of accuracy / pool max, pool min FLOPs / FLOPs, pool min params / params."""
    if not pool:
        raise ParameterError("empty candidate pool")
    max_acc = max(p.top1_acc for p in pool)
    min_flops = min(p.flops for p in pool)
    min_params = min(p.params for p in pool)
    return (w.lambda1 * (m.top1_acc / max_acc)
            + w.lambda2 * (min_flops / m.flops)
            + w.lambda3 * (min_params / m.params))


def rank_and_dedupe(pool, w: EfficiencyWeights = EfficiencyWeights(), top_k: int = 10):
    """Best-scoring model per family, sorted by score, truncated to ``top_k``.

    Returns ``(model, score)`` pairs. Ties fall back to lower FLOPs, lower
    params, then name.
    """
    if top_k < 1:
        raise ParameterError("top_k must be >= 1")
    scored = [(m, efficiency_score(m, pool, w)) for m in pool]
    scored.sort(key=lambda ms: (-ms[1], ms[0].flops, ms[0].params, ms[0].name))
    seen, out = set(), []
    for m, e in scored:
        if m.family in seen:
            continue
        seen.add(m.family)
        out.append((m, e))
        if len(out) == top_k:
            break
    return out


POOL_COLUMNS = ("name", "family", "top1_acc", "params", "flops")


def read_pool(path) -> list[CandidateModel]:
    """Read a headered CSV/TSV pool (delimiter sniffed). Params and FLOPs are raw counts."""
    text = Path(path).read_text()
    try:
        dialect = csv.Sniffer().sniff(text.splitlines()[0], delimiters=",\t;")
    except (csv.Error, IndexError) as exc:
        raise DataError(f"{path}: cannot detect delimiter") from exc
    rows = list(csv.DictReader(text.splitlines(), dialect=dialect))
    missing = set(POOL_COLUMNS) - set(rows[0].keys() if rows else ())
    if missing:
        raise DataError(f"{path}: missing columns {sorted(missing)}")
    try:
        return [CandidateModel(r["name"], r["family"], float(r["top1_acc"]),
                               float(r["params"]), float(r["flops"])) for r in rows]
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def format_ranking(ranked) -> str:
    lines = [f"{'rank':>4}  {'name':<24}{'family':<16}{'top1':>8}{'params':>14}{'flops':>14}{'E':>8}"]
    for i, (m, e) in enumerate(ranked, 1):
        lines.append(f"{i:>4}  {m.name:<24}{m.family:<16}{m.top1_acc:>8.2f}"
                     f"{m.params:>14.6g}{m.flops:>14.6g}{e:>8.3f}")
    return "\n".join(lines)
