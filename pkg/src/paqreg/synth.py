"""Seeded synthetic dataset generator.

Produces a raw table that exercises every curation rule: clean core rows,
near-duplicate stereo siblings that merge away, and rows with disallowed
elements that get filtered. After curation exactly n_rows remain. The target
is a smooth function (decaying linear mix plus mild nonlinearities) of the
informative feature block, rescaled into the 150-260 range.
"""

from __future__ import annotations

import numpy as np

from .chem import Fingerprint
from .errors import InputError
from .ingest import FeatureMatrix, MoleculeRecord

_SMILES_POOL = (
    "CCO",
    "CCN",
    "CC(C)O",
    "CCC",
    "CNC",
    "COC",
    "CCS",
    "NCCO",
    "OCC(O)CO",
    "CC(N)C(=O)O",
    "c1ccccc1",
    "c1ccncc1",
    "CP(C)C",
    "CS(=O)C",
    "OP(=O)(O)O",
    "c1ccc(O)cc1",
    "CC(=O)NC",
    "CCOC(=O)C",
    "NC(=O)CN",
    "CSC",
)

_BAD_SMILES = ("CCCl", "CCBr", "[Fe+2]", "CC(F)C", "CCI", "[Si](C)(C)C")

N_STEREO_EXTRAS = 8
N_BAD_ROWS = len(_BAD_SMILES)
_N_DUP_COLS = 10
_N_NAN_COLS = 2
_N_CONST_COLS = 2

TARGET_CENTER = 205.0
TARGET_SCALE = 20.0
TARGET_LO = 150.0
TARGET_HI = 260.0


def make_dataset(
    n_rows: int = 1000,
    n_features: int = 186,
    n_informative: int = 64,
    seed: int = 0,
) -> tuple[list[MoleculeRecord], FeatureMatrix]:
    """Build the raw (pre-curation) table; curation reduces it to n_rows.

    Layout: n_rows core rows first, then N_STEREO_EXTRAS mergeable siblings,
    then N_BAD_ROWS disallowed-element rows. Informative columns come first;
    the junk block (noise, affine duplicates, NaN carriers, constants) fills
    the rest, always at higher indices than its duplicate sources.
    """
    if n_informative < 4:
        raise InputError("need at least 4 informative features")
    if n_features < n_informative + _N_DUP_COLS + _N_NAN_COLS + _N_CONST_COLS:
        raise InputError(
            f"n_features must be at least "
            f"{n_informative + _N_DUP_COLS + _N_NAN_COLS + _N_CONST_COLS}"
        )
    if n_rows < 40:
        raise InputError("generator is calibrated for at least 40 rows")

    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(n_rows, n_informative))

    decay = 0.8 ** np.arange(n_informative)
    t = Z @ decay
    t = t + 0.5 * np.sin(Z[:, 0]) + 0.3 * Z[:, 1] * Z[:, 2]
    t = t + rng.normal(0.0, 0.05, size=n_rows)
    y = TARGET_CENTER + TARGET_SCALE * (t - t.mean()) / t.std()
    y = np.clip(y, TARGET_LO, TARGET_HI)

    n_junk = n_features - n_informative
    junk = rng.normal(size=(n_rows, n_junk))
    # with fewer informative columns than duplicates, sources must repeat
    dup_src = rng.choice(n_informative, size=_N_DUP_COLS, replace=n_informative < _N_DUP_COLS)
    for k, src in enumerate(dup_src):
        scale = rng.uniform(0.5, 3.0) * rng.choice([-1.0, 1.0])
        junk[:, k] = scale * Z[:, src] + rng.uniform(-2.0, 2.0)
    for k in range(_N_NAN_COLS):
        col = _N_DUP_COLS + k
        bad_rows = rng.choice(n_rows, size=5, replace=False)
        junk[bad_rows, col] = np.nan
    for k in range(_N_CONST_COLS):
        junk[:, _N_DUP_COLS + _N_NAN_COLS + k] = 3.7 + k
    # shuffle only the junk block; duplicate sources all sit in the
    # informative block, so sources stay at lower indices than copies
    junk = junk[:, rng.permutation(n_junk)]

    core_vals = np.hstack([Z, junk])

    smiles = [ _SMILES_POOL[i] for i in rng.integers(0, len(_SMILES_POOL), size=n_rows) ]
    records = [
        MoleculeRecord(
            id=f"m{i:05d}",
            smiles=smiles[i],
            pa=float(y[i]),
            group_key=f"g{i:05d}",
        )
        for i in range(n_rows)
    ]

    # two stereo pairs whose spread exceeds the merge tolerance: shared
    # group_key, both rows must survive curation
    paired_rows: set[int] = set()
    i = 0
    while len(paired_rows) < 4 and i + 1 < n_rows:
        if abs(records[i].pa - records[i + 1].pa) >= 2.0:
            records[i + 1] = MoleculeRecord(
                id=records[i + 1].id,
                smiles=records[i + 1].smiles,
                pa=records[i + 1].pa,
                group_key=records[i].group_key,
            )
            paired_rows.update((i, i + 1))
            i += 2
        else:
            i += 1
    if len(paired_rows) < 4:
        raise InputError("could not place non-merging stereo pairs")

    # sibling sources spread across the table, never on a paired row
    # (a third group member would block that group's merge)
    step = max(1, (n_rows - 10) // (N_STEREO_EXTRAS + 4))
    sources = [r for r in range(10, n_rows, step) if r not in paired_rows]
    if len(sources) < N_STEREO_EXTRAS:
        raise InputError("could not place mergeable stereo siblings")

    extra_records: list[MoleculeRecord] = []
    extra_vals: list[np.ndarray] = []
    for k in range(N_STEREO_EXTRAS):
        src = sources[k]
        base = records[src]
        extra_records.append(
            MoleculeRecord(
                id=f"s{k:02d}",
                smiles=base.smiles,
                pa=float(base.pa + rng.uniform(-0.4, 0.4)),
                group_key=base.group_key,
            )
        )
        extra_vals.append(core_vals[src] + rng.normal(0.0, 0.01, size=n_features))

    bad_records: list[MoleculeRecord] = []
    bad_vals: list[np.ndarray] = []
    for k, smi in enumerate(_BAD_SMILES):
        bad_records.append(
            MoleculeRecord(
                id=f"b{k:02d}",
                smiles=smi,
                pa=float(rng.uniform(TARGET_LO, TARGET_HI)),
                group_key=f"gbad{k:02d}",
            )
        )
        bad_vals.append(rng.normal(size=n_features))

    all_records = records + extra_records + bad_records
    all_vals = np.vstack([core_vals, np.vstack(extra_vals), np.vstack(bad_vals)])
    names = tuple(f"f{j:03d}" for j in range(n_features))
    return all_records, FeatureMatrix(names, all_vals)


def make_fingerprints(
    n_items: int = 60,
    width: int = 512,
    n_clusters: int = 5,
    seed: int = 0,
) -> tuple[list[str], list[Fingerprint]]:
    """Fingerprints with planted cluster structure for similarity demos.

    Each cluster is a random centroid pattern plus members differing by a few
    bit flips; leftover items are independent random patterns (singletons at
    any reasonable threshold).
    """
    if n_items < n_clusters * 2:
        raise InputError("need at least two items per planted cluster")
    rng = np.random.default_rng(seed)
    density = 0.25
    per_cluster = n_items // (2 * n_clusters)  # half the items form clusters
    prints: list[Fingerprint] = []
    for _ in range(n_clusters):
        centroid = rng.random(width) < density
        for _ in range(max(2, per_cluster)):
            member = centroid.copy()
            flips = rng.choice(width, size=3, replace=False)
            member[flips] = ~member[flips]
            prints.append(Fingerprint.from_indices(width, np.flatnonzero(member)))
    while len(prints) < n_items:
        pattern = rng.random(width) < density
        prints.append(Fingerprint.from_indices(width, np.flatnonzero(pattern)))
    prints = prints[:n_items]
    ids = [f"fp{i:04d}" for i in range(len(prints))]
    return ids, prints
