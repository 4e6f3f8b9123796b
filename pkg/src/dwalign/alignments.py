"""Alignment link sets and their text formats.

Links are 0-based (source, target) position pairs; null alignments carry
no link. Pharaoh lines are space-separated ``i-j`` tokens in increasing
target order. Gold files hold one link per line as
``pair_index src_pos tgt_pos flag`` with flag S (sure) or P (possible);
sure links are implicitly possible.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DataError

AlignmentLinks = set  # of (src_pos, tgt_pos) int pairs


@dataclass
class GoldAlignment:
    sure: set = field(default_factory=set)
    possible: set = field(default_factory=set)

    def __post_init__(self):
        self.possible |= self.sure
        if not self.sure <= self.possible:
            raise ValueError("sure links must be a subset of possible links")


def format_pharaoh(links) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(links, key=lambda l: (l[1], l[0])))


def parse_pharaoh_line(line: str, where: str = "<pharaoh>") -> set:
    links = set()
    for tok in line.split():
        parts = tok.split("-")
        if len(parts) != 2:
            raise DataError(f"{where}: bad link token {tok!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"{where}: bad link token {tok!r}")
        if i < 0 or j < 0:
            raise DataError(f"{where}: negative position in {tok!r}")
        links.add((i, j))
    return links


def write_pharaoh(f, links_per_pair) -> None:
    for links in links_per_pair:
        f.write(format_pharaoh(links) + "\n")


def read_pharaoh(path) -> list[set]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            out.append(parse_pharaoh_line(line.rstrip("\n"), f"{path}:{lineno}"))
    return out


def read_gold(path, n_pairs: int | None = None) -> list[GoldAlignment]:
    """Read a gold file into one GoldAlignment per pair index.

    When ``n_pairs`` is given the result has exactly that length and any
    out-of-range pair index is an error; otherwise the length is one past
    the largest index seen.
    """
    raw = []
    max_idx = -1
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4 or parts[3] not in ("S", "P"):
                raise DataError(
                    f"{path}:{lineno}: expected 'pair_index src_pos tgt_pos S|P'")
            try:
                idx, i, j = int(parts[0]), int(parts[1]), int(parts[2])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer field")
            if idx < 0 or i < 0 or j < 0:
                raise DataError(f"{path}:{lineno}: negative field")
            if n_pairs is not None and idx >= n_pairs:
                raise DataError(
                    f"{path}:{lineno}: pair index {idx} out of range for "
                    f"{n_pairs} predicted pairs")
            raw.append((idx, i, j, parts[3]))
            max_idx = max(max_idx, idx)

    count = n_pairs if n_pairs is not None else max_idx + 1
    golds = [GoldAlignment() for _ in range(count)]
    for idx, i, j, flag in raw:
        golds[idx].possible.add((i, j))
        if flag == "S":
            golds[idx].sure.add((i, j))
    return golds


def write_gold(f, golds) -> None:
    for idx, gold in enumerate(golds):
        for i, j in sorted(gold.possible):
            flag = "S" if (i, j) in gold.sure else "P"
            f.write(f"{idx} {i} {j} {flag}\n")
