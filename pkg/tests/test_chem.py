"""Fingerprints, similarity, clustering, and frontier-orbital descriptors."""

import numpy as np
import pytest

from paqreg.chem import (
    ClusterResult,
    Fingerprint,
    butina_cluster,
    derive_qc,
    mean_pairwise_similarity,
    read_fingerprints,
    tanimoto,
    write_fingerprints,
)
from paqreg.errors import InputError
from paqreg.synth import make_fingerprints
from reference import ref_butina, ref_tanimoto


def rand_print(rng, width, density=0.3):
    idx = np.flatnonzero(rng.random(width) < density)
    return Fingerprint.from_indices(width, idx.tolist())


def test_fingerprint_round_trips_indices():
    fp = Fingerprint.from_indices(16, [0, 3, 15])
    assert fp.to_indices() == [0, 3, 15]
    assert fp.popcount == 3
    assert Fingerprint.from_indices(16, fp.to_indices()) == fp


def test_fingerprint_rejects_out_of_range_bits():
    with pytest.raises(InputError):
        Fingerprint.from_indices(8, [8])
    with pytest.raises(InputError):
        Fingerprint(8, 1 << 8)
    with pytest.raises(InputError):
        Fingerprint(0, 0)


def test_tanimoto_hand_values():
    a = Fingerprint.from_indices(32, [0, 1, 2, 3])
    b = Fingerprint.from_indices(32, [2, 3, 4, 5, 6, 7])
    assert tanimoto(a, b) == 0.25  # 2 shared / (4 + 6 - 2)
    assert tanimoto(a, a) == 1.0
    disjoint = Fingerprint.from_indices(32, [10, 11])
    assert tanimoto(a, disjoint) == 0.0


def test_tanimoto_error_cases():
    a = Fingerprint.from_indices(16, [1])
    with pytest.raises(InputError):
        tanimoto(a, Fingerprint.from_indices(32, [1]))
    with pytest.raises(InputError):
        tanimoto(Fingerprint(16, 0), Fingerprint(16, 0))


def test_tanimoto_symmetric_and_reflexive():
    rng = np.random.default_rng(3)
    for _ in range(100):
        a = rand_print(rng, 64)
        b = rand_print(rng, 64)
        if a.bits == 0 and b.bits == 0:
            continue
        assert tanimoto(a, b) == tanimoto(b, a)
        if a.bits:
            assert tanimoto(a, a) == 1.0


def test_tanimoto_matches_index_set_reference():
    rng = np.random.default_rng(5)
    for _ in range(200):
        width = int(rng.integers(8, 256))
        a = rand_print(rng, width)
        b = rand_print(rng, width)
        sa, sb = set(a.to_indices()), set(b.to_indices())
        if not sa and not sb:
            continue
        assert tanimoto(a, b) == ref_tanimoto(sa, sb)


def test_mean_pairwise_similarity():
    a = Fingerprint.from_indices(8, [0, 1])
    same = Fingerprint.from_indices(8, [0, 1])
    assert mean_pairwise_similarity([a, same]) == (1.0, 0.0)

    # pairwise sims 1, 0, 0 -> mean 1/3
    c = Fingerprint.from_indices(8, [5, 6])
    mean, std = mean_pairwise_similarity([a, same, c])
    assert abs(mean - 1 / 3) < 1e-15
    expected_std = float(np.std([1.0, 0.0, 0.0]))
    assert abs(std - expected_std) < 1e-15

    with pytest.raises(InputError):
        mean_pairwise_similarity([a])


def test_butina_hand_case():
    # sims: (A,B)=0.8, (A,C)=0.1, (B,C)=0.1 at threshold 0.7
    a = Fingerprint.from_indices(16, [0, 1, 2, 3, 4])
    b = Fingerprint.from_indices(16, [0, 1, 2, 3, 5])
    c = Fingerprint.from_indices(16, [10, 11])
    assert tanimoto(a, b) == pytest.approx(4 / 6)
    res = butina_cluster([a, b, c], threshold=0.6)
    assert res.clusters == ((0, 1), (2,))
    assert res.singleton_count == 1
    assert res.labels(3) == [0, 0, 1]


def test_butina_degenerate_cases():
    assert butina_cluster([], 0.7).clusters == ()
    rng = np.random.default_rng(11)
    prints = [rand_print(rng, 64) for _ in range(6)]
    every = butina_cluster(prints, threshold=1e-9)
    # all non-disjoint items glue together at a vanishing threshold
    assert len(every.clusters) <= 6
    identical = [Fingerprint.from_indices(8, [1, 2])] * 5
    one = butina_cluster(identical, threshold=0.7)
    assert one.clusters == ((0, 1, 2, 3, 4),)
    singles = butina_cluster(
        [Fingerprint.from_indices(8, [i]) for i in range(5)], threshold=0.7
    )
    assert singles.singleton_count == 5
    with pytest.raises(InputError):
        butina_cluster(prints, threshold=0.0)
    with pytest.raises(InputError):
        butina_cluster(prints, threshold=1.5)


def test_butina_matches_recount_reference():
    rng = np.random.default_rng(13)
    for trial in range(40):
        n = int(rng.integers(2, 25))
        width = int(rng.integers(16, 128))
        prints = [rand_print(rng, width, density=0.4) for _ in range(n)]
        # ensure no all-empty pair breaks the similarity matrix
        prints = [
            fp if fp.bits else Fingerprint.from_indices(width, [0]) for fp in prints
        ]
        sim = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                sim[i, j] = sim[j, i] = tanimoto(prints[i], prints[j])
        threshold = float(rng.uniform(0.1, 0.9))
        got = butina_cluster(prints, threshold)
        want = ref_butina(sim, threshold)
        assert [list(c) for c in got.clusters] == want


def test_butina_output_is_partition_with_centroid_property():
    rng = np.random.default_rng(17)
    for trial in range(30):
        n = int(rng.integers(2, 30))
        prints = [rand_print(rng, 64, density=0.5) for _ in range(n)]
        prints = [
            fp if fp.bits else Fingerprint.from_indices(64, [0]) for fp in prints
        ]
        res = butina_cluster(prints, threshold=0.5)
        flat = [i for c in res.clusters for i in c]
        assert sorted(flat) == list(range(n))
        for cluster in res.clusters:
            centroid = cluster[0]
            for member in cluster[1:]:
                assert tanimoto(prints[centroid], prints[member]) >= 0.5


def test_planted_clusters_recovered():
    ids, prints = make_fingerprints(n_items=40, width=256, n_clusters=4, seed=2)
    res = butina_cluster(prints, threshold=0.6)
    assert len(res.clusters) >= 4
    sizes = [len(c) for c in res.clusters]
    assert sizes == sorted(sizes, reverse=True)


def test_derive_qc_formulas():
    d = derive_qc(-0.3, 0.1)
    assert d.mu == pytest.approx(-0.1)
    assert d.eta == pytest.approx(0.2)
    d2 = derive_qc(-0.25, -0.05)
    assert d2.mu == pytest.approx(-0.15)
    assert d2.eta == pytest.approx(0.10)
    d3 = derive_qc(0.4, 0.4)
    assert d3.mu == 0.4 and d3.eta == 0.0
    carried = derive_qc(-0.3, 0.1, dipole=1.5, q_mk=0.2)
    assert carried.dipole == 1.5 and carried.q_mk == 0.2 and carried.q_cm5 is None
    with pytest.raises(InputError):
        derive_qc(float("nan"), 0.1)


def test_fingerprint_file_round_trip(tmp_path):
    rng = np.random.default_rng(19)
    prints = [rand_print(rng, 128) for _ in range(20)]
    ids = [f"mol{i:03d}" for i in range(20)]
    path = tmp_path / "fp.csv"
    write_fingerprints(path, ids, prints)
    got_ids, got_prints = read_fingerprints(path)
    assert got_ids == ids
    assert got_prints == prints
    first = path.read_text().splitlines()[0]
    assert first == "# width=128"


def test_fingerprint_file_errors(tmp_path):
    path = tmp_path / "fp.csv"
    path.write_text("id,fp_hex\nmol,ff\n")
    with pytest.raises(InputError, match="line 1"):
        read_fingerprints(path)
    path.write_text("# width=16\nid,fp_hex\nmol,zz\n")
    with pytest.raises(InputError, match="line 3"):
        read_fingerprints(path)
    with pytest.raises(InputError):
        write_fingerprints(path, ["a"], [])
