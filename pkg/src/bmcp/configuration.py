"""Configurations on a finite window of the integer lattice.

A configuration is a bitset over an integer window with cached extreme
indices, plus a left-boundary tag distinguishing genuinely finite sets from
truncated half-line states (infinitely many infections to the left,
represented by a frozen guard at the left end of the window).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

FINITE = "finite"
HALF_LINE = "half_line"

NEG_INF = -math.inf
POS_INF = math.inf


@dataclass
class Configuration:
    lo: int
    hi: int
    words: list[int] = field(repr=False, default_factory=list)
    left_boundary: str = FINITE
    _left: int | None = None
    _right: int | None = None
    _count: int = 0

    @classmethod
    def from_sites(cls, sites, lo: int, hi: int, left_boundary: str = FINITE) -> "Configuration":
        if lo > hi:
            raise ValueError("window must satisfy lo <= hi")
        n_words = (hi - lo + 64) // 64
        cfg = cls(lo=lo, hi=hi, words=[0] * n_words, left_boundary=left_boundary)
        for s in sites:
            cfg.infect(s)
        return cfg

    @classmethod
    def empty(cls, lo: int, hi: int, left_boundary: str = FINITE) -> "Configuration":
        return cls.from_sites((), lo, hi, left_boundary)

    def _check(self, site: int):
        if site < self.lo or site > self.hi:
            raise ValueError(f"site {site} outside window [{self.lo}, {self.hi}]")

    def __contains__(self, site: int) -> bool:
        if site < self.lo or site > self.hi:
            return False
        k = site - self.lo
        return (self.words[k >> 6] >> (k & 63)) & 1 == 1

    def infect(self, site: int):
        self._check(site)
        k = site - self.lo
        w, b = k >> 6, k & 63
        if not (self.words[w] >> b) & 1:
            self.words[w] |= 1 << b
            self._count += 1
            if self._right is None or site > self._right:
                self._right = site
            if self._left is None or site < self._left:
                self._left = site

    def recover(self, site: int):
        self._check(site)
        k = site - self.lo
        w, b = k >> 6, k & 63
        if (self.words[w] >> b) & 1:
            self.words[w] &= ~(1 << b)
            self._count -= 1
            if self._count == 0:
                self._left = self._right = None
            else:
                if site == self._right:
                    self._right = self._scan_down(site - 1)
                if site == self._left:
                    self._left = self._scan_up(site + 1)

    def _scan_down(self, site: int) -> int:
        for s in range(site, self.lo - 1, -1):
            if s in self:
                return s
        raise AssertionError("scan_down called on empty configuration")

    def _scan_up(self, site: int) -> int:
        for s in range(site, self.hi + 1):
            if s in self:
                return s
        raise AssertionError("scan_up called on empty configuration")

    def sites(self) -> list[int]:
        out = []
        for w, word in enumerate(self.words):
            while word:
                b = (word & -word).bit_length() - 1
                out.append(self.lo + 64 * w + b)
                word &= word - 1
        return out

    # -- observables ---------------------------------------------------

    @property
    def guard_infected(self) -> bool:
        return self.left_boundary == HALF_LINE and self._left is not None and self._left == self.lo

    def recompute_extremes(self) -> tuple[int | None, int | None]:
        """Rescan the bitset; must agree with the cached extremes."""
        sites = self.sites()
        if not sites:
            return None, None
        return sites[0], sites[-1]


def right_edge(cfg: Configuration) -> int | None:
    """Rightmost infected site; ``None`` encodes the empty configuration."""
    return cfg._right


def left_edge(cfg: Configuration):
    """Leftmost infected site; ``None`` on empty, ``-inf`` when the
    truncated half-line guard is infected."""
    if cfg.left_boundary == HALF_LINE and cfg._left is not None and cfg._left == cfg.lo:
        return NEG_INF
    return cfg._left


def cardinality(cfg: Configuration):
    """Number of infected sites; ``inf`` when the half-line guard is infected."""
    if cfg.left_boundary == HALF_LINE and cfg._left is not None and cfg._left == cfg.lo:
        return POS_INF
    return cfg._count


def shift_to_right_edge(cfg: Configuration) -> Configuration | None:
    """Translate so the rightmost infected site sits at 0.

    Returns ``None`` (the dead-state value) when the configuration is empty.
    Cardinality and all pairwise gaps are preserved.
    """
    r = cfg._right
    if r is None:
        return None
    return Configuration.from_sites(
        (s - r for s in cfg.sites()),
        lo=cfg.lo - r,
        hi=cfg.hi - r,
        left_boundary=cfg.left_boundary,
    )


def to_json_dict(cfg: Configuration) -> dict:
    return {
        "lo": cfg.lo,
        "hi": cfg.hi,
        "infected": cfg.sites(),
        "left_boundary": cfg.left_boundary,
    }


def from_json_dict(d: dict) -> Configuration:
    return Configuration.from_sites(
        d["infected"], lo=int(d["lo"]), hi=int(d["hi"]),
        left_boundary=d.get("left_boundary", FINITE),
    )
