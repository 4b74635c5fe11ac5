import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuplewise.sampling import (
    DivisibilityError,
    SchemeKind,
    SeedProtocol,
    Tag,
    assign,
    derive_seed,
    records_moved,
    simulate_coordination_free,
)

ALL = list(SchemeKind)


class TestSeedProtocol:
    def test_same_key_same_stream(self):
        a = SeedProtocol(5).generator(3, Tag.X).random(4)
        b = SeedProtocol(5).generator(3, Tag.X).random(4)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        p = SeedProtocol(5)
        draws = {p.generator(e, t, w).random() for e in (0, 1) for t in (Tag.X, Tag.Z) for w in (0, 1)}
        assert len(draws) == 8

    def test_epoch_random_access(self):
        # epoch 10 does not depend on having built epochs 0..9
        p = SeedProtocol(11)
        direct = assign(SchemeKind.PropSWOR, 40, 8, 4, p, 10)
        for e in range(10):
            assign(SchemeKind.PropSWOR, 40, 8, 4, p, e)
        assert assign(SchemeKind.PropSWOR, 40, 8, 4, p, 10) == direct

    def test_key_bounds(self):
        with pytest.raises(ValueError):
            SeedProtocol(-1)
        with pytest.raises(ValueError):
            SeedProtocol(0).key(2**32, Tag.X)
        with pytest.raises(ValueError):
            SeedProtocol(0).key(0, Tag.X, worker=2**24)

    def test_derive_seed(self):
        assert derive_seed(1, 2) == derive_seed(1, 2)
        assert derive_seed(1, 2) != derive_seed(1, 3)
        assert 0 <= derive_seed(1, 2) < 2**64


class TestAssign:
    @pytest.mark.parametrize("scheme", ALL)
    def test_covers_and_sizes(self, scheme):
        a = assign(scheme, 40, 20, 4, SeedProtocol(3), 2)
        assert a.N == 4
        if scheme is SchemeKind.PropSWR:
            assert all(s == (10, 5) for s in a.sizes())
            return
        xs = np.sort(np.concatenate(a.x_indices))
        zs = np.sort(np.concatenate(a.z_indices))
        np.testing.assert_array_equal(xs, np.arange(40))
        np.testing.assert_array_equal(zs, np.arange(20))
        if scheme.proportional:
            assert all(s == (10, 5) for s in a.sizes())
        else:
            assert all(len(x) + len(z) == 15 for x, z in a.per_worker)

    def test_divisibility(self):
        with pytest.raises(DivisibilityError):
            assign(SchemeKind.PropSWOR, 10, 7, 2, SeedProtocol(0), 0)
        with pytest.raises(DivisibilityError):
            assign(SchemeKind.SWOR, 10, 3, 2, SeedProtocol(0), 0)

    def test_deterministic_shuffle_rotates(self):
        a0 = assign(SchemeKind.DeterministicShuffle, 6, 3, 3, SeedProtocol(0), 0)
        a1 = assign(SchemeKind.DeterministicShuffle, 6, 3, 3, SeedProtocol(0), 1)
        assert list(a0.x_indices[0]) == [0, 3]
        assert list(a1.x_indices[1]) == [0, 3]
        assert [list(z) for z in a0.z_indices] == [list(z) for z in a1.z_indices]

    def test_propswor_uniform_over_partitions(self):
        # n=4, N=2: each of the 3 unordered splits, times 2 orders, is equally likely
        counts = {}
        p = SeedProtocol(99)
        R = 6000
        for e in range(R):
            a = assign(SchemeKind.PropSWOR, 4, 2, 2, p, e)
            key = tuple(a.x_indices[0])
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 6
        for v in counts.values():
            assert abs(v / R - 1 / 6) < 0.02

    def test_swor_empty_worker_probability(self):
        # oracle: enumerate every pooled permutation of n=2, m=2 into N=2 blocks
        n, m = 2, 2
        perms = list(itertools.permutations(range(n + m)))
        empty = sum(any(all(r < n for r in blk) for blk in (p[:2], p[2:])) for p in perms)
        exact = Fraction(empty, len(perms))
        assert exact == Fraction(1, 3)
        proto = SeedProtocol(4)
        R = 6000
        hits = sum(
            any(len(z) == 0 for z in assign(SchemeKind.SWOR, n, m, 2, proto, e).z_indices)
            for e in range(R)
        )
        assert abs(hits / R - float(exact)) < 0.025

    def test_fingerprint_stable(self):
        a = assign(SchemeKind.PropSWOR, 8, 4, 2, SeedProtocol(1), 0)
        b = assign(SchemeKind.PropSWOR, 8, 4, 2, SeedProtocol(1), 0)
        assert a.fingerprint() == b.fingerprint() and hash(a) == hash(b)

    def test_indices_read_only(self):
        a = assign(SchemeKind.PropSWOR, 8, 4, 2, SeedProtocol(1), 0)
        with pytest.raises(ValueError):
            a.x_indices[0][0] = 3

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**63), st.integers(0, 2**32 - 1), st.integers(1, 6))
    def test_coordination_free(self, seed, epoch, N):
        assert simulate_coordination_free(3, SeedProtocol(seed), epoch, 6 * N, 2 * N, N)


class TestRecordsMoved:
    def test_initial(self):
        a = assign(SchemeKind.PropSWOR, 8, 4, 2, SeedProtocol(1), 0)
        assert records_moved(None, a) == 12

    def test_identity(self):
        a = assign(SchemeKind.PropSWOR, 8, 4, 2, SeedProtocol(1), 0)
        assert records_moved(a, a) == 0

    def test_deterministic_shuffle_moves_every_x(self):
        p = SeedProtocol(0)
        a0 = assign(SchemeKind.DeterministicShuffle, 6, 3, 3, p, 0)
        a1 = assign(SchemeKind.DeterministicShuffle, 6, 3, 3, p, 1)
        assert records_moved(a0, a1) == 6

    def test_shape_mismatch(self):
        p = SeedProtocol(0)
        with pytest.raises(ValueError):
            records_moved(assign(SchemeKind.PropSWOR, 8, 4, 2, p, 0), assign(SchemeKind.PropSWOR, 8, 4, 4, p, 0))

    def test_bounded(self):
        p = SeedProtocol(2)
        a0 = assign(SchemeKind.PropSWOR, 40, 8, 4, p, 0)
        a1 = assign(SchemeKind.PropSWOR, 40, 8, 4, p, 1)
        assert 0 <= records_moved(a0, a1) <= 48
