"""Rank-fusion feature selection.

Each importance provider's scores are turned into ranks; a feature's fused
score is its mean rank over providers, with a penalty rank for providers
that did not list it. Working on ranks makes the fusion blind to the scale
of each provider's scores.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class RankedFeature:
    feature: str
    importance: float
    rank: int


@dataclass(frozen=True)
class ImportanceRanking:
    method: str
    entries: tuple[RankedFeature, ...]

    def rank_of(self, feature: str) -> int | None:
        for e in self.entries:
            if e.feature == feature:
                return e.rank
        return None

    @property
    def penalty(self) -> int:
        return len(self.entries) + 1

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class FusedEntry:
    feature: str
    method_ranks: tuple[int, ...]
    penalized: tuple[bool, ...]
    mean_rank: float
    final_rank: int


@dataclass(frozen=True)
class FusedRanking:
    methods: tuple[str, ...]
    entries: tuple[FusedEntry, ...]

    def final_rank(self, feature: str) -> int:
        for e in self.entries:
            if e.feature == feature:
                return e.final_rank
        raise KeyError(feature)


def rank_importances(importances: dict[str, float], method: str) -> ImportanceRanking:
    """Rank 1 = largest importance; equal importances ordered by feature name."""
    if not importances:
        raise ValueError(f"{method}: no importances given")
    for name, value in importances.items():
        if not math.isfinite(value):
            raise ValueError(f"{method}: importance of {name!r} is not finite ({value})")
    ordered = sorted(importances.items(), key=lambda kv: (-kv[1], kv[0]))
    return ImportanceRanking(
        method, tuple(RankedFeature(name, float(v), i) for i, (name, v) in enumerate(ordered, start=1))
    )


def fuse_ranks(rankings: list[ImportanceRanking], universe=None) -> FusedRanking:
    """Mean-rank fusion; ties fall back to the second method's rank, then the name."""
    if len(rankings) < 2:
        raise ValueError("rank fusion needs at least two rankings")
    if universe is None:
        universe = sorted({e.feature for r in rankings for e in r.entries})
    universe = list(dict.fromkeys(universe))
    if not universe:
        raise ValueError("empty feature universe")
    scored = []
    for feature in universe:
        ranks, penalized = [], []
        for r in rankings:
            got = r.rank_of(feature)
            ranks.append(r.penalty if got is None else got)
            penalized.append(got is None)
        mean = sum(ranks) / len(ranks)
        scored.append((mean, ranks[1], feature, tuple(ranks), tuple(penalized)))
    scored.sort(key=lambda t: (t[0], t[1], t[2]))
    entries = tuple(
        FusedEntry(feature, ranks, pen, mean, i)
        for i, (mean, _, feature, ranks, pen) in enumerate(scored, start=1)
    )
    return FusedRanking(tuple(r.method for r in rankings), entries)


def select_top_k(fused: FusedRanking, k: int) -> list[str]:
    if not 1 <= k <= len(fused.entries):
        raise ValueError(f"k must be between 1 and {len(fused.entries)}, got {k}")
    return [e.feature for e in fused.entries if e.final_rank <= k]


def read_importances_csv(path) -> dict[str, float]:
    """Read ``feature,importance`` lines (an optional header row is skipped)."""
    out: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected feature,importance")
            try:
                value = float(row[1])
            except ValueError:
                if lineno == 1:
                    continue
                raise ValueError(f"{path}:{lineno}: bad importance {row[1]!r}") from None
            out[row[0].strip()] = value
    return out


def write_importances_csv(importances: dict[str, float], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "importance"])
        for name, value in importances.items():
            writer.writerow([name, repr(float(value))])


def fused_to_csv(fused: FusedRanking, rankings: list[ImportanceRanking], path) -> None:
    """One row per feature: each method's importance and rank, the mean rank and the final rank."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["feature"]
        for m in fused.methods:
            header += [f"{m}_importance", f"{m}_rank"]
        header += ["mean_rank", "final_rank"]
        writer.writerow(header)
        for e in fused.entries:
            row = [e.feature]
            for r, rank, pen in zip(rankings, e.method_ranks, e.penalized):
                imp = next((x.importance for x in r.entries if x.feature == e.feature), None)
                row += ["" if imp is None else repr(imp), f"{rank}{'*' if pen else ''}"]
            row += [repr(e.mean_rank), e.final_rank]
            writer.writerow(row)
