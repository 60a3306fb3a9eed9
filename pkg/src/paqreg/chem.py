"""Bit-vector fingerprints, similarity, leader-style clustering, and
reactivity descriptors derived from frontier orbital energies."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class Fingerprint:
    """Fixed-width binary fingerprint stored as a single Python int.

    Bit i set means feature i present. Widths are arbitrary but must match
    when comparing two prints.
    """

    width: int
    bits: int

    def __post_init__(self):
        if self.width < 1:
            raise InputError("fingerprint width must be positive")
        if self.bits < 0 or self.bits >> self.width:
            raise InputError("fingerprint bits exceed declared width")

    @classmethod
    def from_indices(cls, width: int, indices) -> "Fingerprint":
        bits = 0
        for i in indices:
            i = int(i)  # numpy ints would overflow the shift past bit 63
            if not 0 <= i < width:
                raise InputError(f"bit index {i} outside width {width}")
            bits |= 1 << i
        return cls(width, bits)

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def to_indices(self) -> list[int]:
        out = []
        bits = self.bits
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return out


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """Tanimoto similarity c / (a + b - c) over set bits."""
    if a.width != b.width:
        raise InputError(f"fingerprint widths differ: {a.width} vs {b.width}")
    c = (a.bits & b.bits).bit_count()
    denom = a.popcount + b.popcount - c
    if denom == 0:
        raise InputError("similarity of two empty fingerprints is undefined")
    return c / denom


def mean_pairwise_similarity(prints: list[Fingerprint]) -> tuple[float, float]:
    """Mean and population std of Tanimoto over all unordered pairs."""
    n = len(prints)
    if n < 2:
        raise InputError("pairwise similarity needs at least 2 fingerprints")
    sims = [
        tanimoto(prints[i], prints[j]) for i in range(n) for j in range(i + 1, n)
    ]
    arr = np.asarray(sims)
    return float(arr.mean()), float(arr.std())


@dataclass(frozen=True)
class ClusterResult:
    """Clusters as index tuples, largest first; each starts with its centroid."""

    clusters: tuple[tuple[int, ...], ...]
    threshold: float

    @property
    def singleton_count(self) -> int:
        return sum(1 for c in self.clusters if len(c) == 1)

    def labels(self, n_items: int) -> list[int]:
        out = [-1] * n_items
        for label, members in enumerate(self.clusters):
            for i in members:
                out[i] = label
        return out


def butina_cluster(prints: list[Fingerprint], threshold: float) -> ClusterResult:
    """Sphere-exclusion clustering on precomputed neighbor lists.

    An item's neighbors are those with similarity >= threshold (self
    excluded). Repeatedly the unassigned item with the most unassigned
    neighbors (ties: lowest index) becomes a centroid and absorbs its
    unassigned neighbors. Result is sorted by descending cluster size,
    creation order breaking ties.
    """
    if not 0.0 < threshold <= 1.0:
        raise InputError("similarity threshold must lie in (0, 1]")
    n = len(prints)
    if n == 0:
        return ClusterResult(clusters=(), threshold=threshold)

    neighbors: list[list[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if tanimoto(prints[i], prints[j]) >= threshold:
                neighbors[i].append(j)
                neighbors[j].append(i)

    # counts[i] tracks how many of i's neighbors are still unassigned;
    # decremented incrementally instead of recounted each round.
    counts = [len(nb) for nb in neighbors]
    assigned = [False] * n
    clusters: list[tuple[int, ...]] = []
    remaining = n
    while remaining:
        best = -1
        best_count = -1
        for i in range(n):
            if not assigned[i] and counts[i] > best_count:
                best = i
                best_count = counts[i]
        members = [best] + sorted(j for j in neighbors[best] if not assigned[j])
        for m in members:
            assigned[m] = True
        for m in members:
            for j in neighbors[m]:
                if not assigned[j]:
                    counts[j] -= 1
        clusters.append(tuple(members))
        remaining -= len(members)

    clusters.sort(key=len, reverse=True)  # stable: creation order within a size
    return ClusterResult(clusters=tuple(clusters), threshold=threshold)


@dataclass(frozen=True)
class DerivedDescriptors:
    """Reactivity descriptors from frontier orbital energies (hartree), with
    optional pass-through fields carried along from upstream calculations."""

    e_homo: float
    e_lumo: float
    mu: float  # chemical potential, (e_homo + e_lumo) / 2
    eta: float  # hardness, (e_lumo - e_homo) / 2
    dipole: float | None = None
    q_mk: float | None = None
    q_cm5: float | None = None


def derive_qc(e_homo: float, e_lumo: float, **passthrough) -> DerivedDescriptors:
    if not (np.isfinite(e_homo) and np.isfinite(e_lumo)):
        raise InputError("orbital energies must be finite")
    return DerivedDescriptors(
        e_homo=e_homo,
        e_lumo=e_lumo,
        mu=(e_homo + e_lumo) / 2.0,
        eta=(e_lumo - e_homo) / 2.0,
        **passthrough,
    )


def write_fingerprints(path: str | Path, ids: list[str], prints: list[Fingerprint]) -> None:
    """Write fingerprints as CSV: a width comment line, then id,hex rows."""
    if len(ids) != len(prints):
        raise InputError("id list and fingerprint list lengths differ")
    if prints:
        widths = {fp.width for fp in prints}
        if len(widths) != 1:
            raise InputError(f"mixed fingerprint widths {sorted(widths)}")
        width = prints[0].width
    else:
        width = 0
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(f"# width={width}\n")
        fh.write("id,fp_hex\n")
        for rec_id, fp in zip(ids, prints):
            fh.write(f"{rec_id},{fp.bits:x}\n")


def read_fingerprints(path: str | Path) -> tuple[list[str], list[Fingerprint]]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        first = fh.readline().strip()
        if not first.startswith("# width="):
            raise InputError("line 1: expected '# width=<n>' comment")
        try:
            width = int(first.removeprefix("# width="))
        except ValueError:
            raise InputError(f"line 1: bad width in {first!r}") from None
        header = fh.readline().strip()
        if header != "id,fp_hex":
            raise InputError(f"line 2: expected 'id,fp_hex' header, got {header!r}")
        ids: list[str] = []
        prints: list[Fingerprint] = []
        for line_no, line in enumerate(fh, start=3):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise InputError(f"line {line_no}: expected two cells")
            try:
                bits = int(parts[1], 16)
            except ValueError:
                raise InputError(
                    f"line {line_no}: bad fingerprint hex {parts[1]!r}"
                ) from None
            ids.append(parts[0])
            prints.append(Fingerprint(width, bits))
    return ids, prints
