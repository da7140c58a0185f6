"""Per-round storage-unit counters."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass
class CostReport:
    """Storage units read, emitted, shuffled and written by one or more rounds.

    One unit is one stored vertex id.
    """

    map_in: int = 0
    map_out: int = 0
    shuffle: int = 0
    reduce_in: int = 0
    reduce_out: int = 0

    @property
    def total(self) -> int:
        return self.map_in + self.map_out + self.shuffle + self.reduce_in + self.reduce_out

    def __add__(self, other: CostReport) -> CostReport:
        return CostReport(
            self.map_in + other.map_in,
            self.map_out + other.map_out,
            self.shuffle + other.shuffle,
            self.reduce_in + other.reduce_in,
            self.reduce_out + other.reduce_out,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["total"] = self.total
        return d


def sum_reports(reports) -> CostReport:
    out = CostReport()
    for r in reports:
        out = out + r
    return out
