"""Plain oracles, record/replay equivalence, and observable cross-checks."""

import numpy as np
import pytest

from multispin.engine import Engine
from multispin.lattice import LatticeDims, unpack
from multispin.reference import (
    RandomMap,
    acceptance_lut,
    checkerboard_sweep_plain,
    energy,
    magnetization,
    neighbor_code_brute,
    neighbor_sum_brute,
    record_engine_randoms,
    single_spin_sweep,
)
from multispin.rng import Xoshiro256pp

DIMS = LatticeDims(12, 96)


def random_spins(dims, seed):
    rng = np.random.default_rng(seed)
    return rng.choice(np.array([-1, 1], dtype=np.int8), size=(dims.m, dims.n))


class TestNeighborSums:
    def test_uniform_lattices(self):
        up = np.ones((12, 96), dtype=np.int8)
        assert neighbor_sum_brute(up, 0) == 4
        assert neighbor_sum_brute(-up, 500) == -4

    def test_matches_code_decomposition(self):
        spins = random_spins(DIMS, 1)
        codes = neighbor_code_brute(spins)
        for idx in range(0, DIMS.sites, 7):
            n_up = (neighbor_sum_brute(spins, idx) + 4) // 2
            own = int(spins.reshape(-1)[idx] > 0)
            assert codes[idx] == 8 * own + n_up


class TestEnergyMagnetization:
    def test_all_up(self):
        spins = np.ones((12, 96), dtype=np.int8)
        assert energy(spins) == -2.0 * DIMS.sites
        assert magnetization(spins) == 1.0

    def test_perfect_checkerboard_frustrated(self):
        cols = np.arange(12)[:, None]
        rows = np.arange(96)[None, :]
        spins = np.where((cols + rows) % 2 == 0, 1, -1).astype(np.int8)
        assert energy(spins) == 2.0 * DIMS.sites
        assert magnetization(spins) == 0.0

    def test_against_double_loop(self):
        spins = random_spins(DIMS, 2)
        total = 0
        for c in range(12):
            for r in range(96):
                total += int(spins[c, r]) * int(spins[(c + 1) % 12, r])
                total += int(spins[c, r]) * int(spins[c, (r + 1) % 96])
        assert energy(spins) == -float(total)
        assert magnetization(spins) == spins.sum() / spins.size

    def test_energy_scales_with_coupling(self):
        spins = random_spins(DIMS, 3)
        assert energy(spins, J=2.5) == 2.5 * energy(spins)


class TestSingleSpinSweep:
    def test_ground_state_frozen_at_low_temperature(self):
        spins = np.ones((4, 32), dtype=np.int8)
        single_spin_sweep(spins, 1e-9, Xoshiro256pp(1))
        assert (spins == 1).all()

    def test_energy_lowering_flip_taken(self):
        spins = np.ones((4, 32), dtype=np.int8)
        spins[2, 5] = -1

        class ZeroRng:
            def next_unit_float(self):
                return 0.0

        single_spin_sweep(spins, 0.5, ZeroRng())
        # draw 0 < ratio accepts everything it can; the lone down spin's
        # flip lowers the energy and must have been taken when visited
        assert spins[2, 5] == 1 or (spins != 1).any()
        # deterministic zero draws flip every site once, in index order:
        # verify with a fresh lattice that each site toggled exactly once
        fresh = np.ones((4, 32), dtype=np.int8)
        single_spin_sweep(fresh, 1e12, ZeroRng())
        assert (fresh == -1).all()

    def test_statistical_match_with_engine(self):
        # Sequential and checkerboard sweeps share the stationary
        # distribution, so long-run <|M|> must agree within correlated errors.
        from multispin.observables import statistical_inefficiency

        dims = LatticeDims(4, 32)
        T = 2.0
        spins = np.ones((dims.m, dims.n), dtype=np.int8)
        gen = Xoshiro256pp(12, stream=0)
        ms_plain = []
        for k in range(8000):
            single_spin_sweep(spins, T, gen)
            if k >= 1500:
                ms_plain.append(abs(magnetization(spins)))
        ms_plain = np.array(ms_plain)
        eng = Engine(dims, [T], seed=13, init="all-up")
        traj = eng.run(8000, measure_interval=1)
        ms_packed = traj.abs_m[1500:, 0]
        sem2 = lambda a: a.var() * statistical_inefficiency(a) / a.size
        sigma = np.sqrt(sem2(ms_plain) + sem2(ms_packed))
        assert abs(ms_plain.mean() - ms_packed.mean()) < 3 * sigma + 0.01


class TestCheckerboardOracle:
    def test_all_ones_draws_freeze(self):
        spins = random_spins(DIMS, 4)
        before = spins.copy()
        checkerboard_sweep_plain(spins, 2.0, np.ones((12, 96)))
        assert (spins == before).all()

    def test_all_zero_draws_flip_everything(self):
        spins = random_spins(DIMS, 5)
        before = spins.copy()
        checkerboard_sweep_plain(spins, 2.0, np.zeros((12, 96)))
        assert (spins == -before).all()

    def test_missing_entries_hard_error(self):
        spins = random_spins(DIMS, 6)
        draws = np.full((12, 96), np.nan)
        draws[1::1, :] = 0.5  # fill everything...
        draws[0, 0] = np.nan  # ...except one red site
        with pytest.raises(KeyError):
            checkerboard_sweep_plain(spins, 2.0, draws)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            checkerboard_sweep_plain(random_spins(DIMS, 7), 2.0, np.ones((12, 32)))

    def test_acceptance_lut_matches_engine_table(self):
        from multispin.engine import build_exp_table

        for T in (0.5, 1.7, 2.0, 5.0):
            lut = acceptance_lut(T)
            table = build_exp_table(T)
            for own in (0, 1):
                for n_up in range(5):
                    nb_sum = 2 * n_up - 4
                    want = table[8 * own + n_up]
                    got = min(1.0, lut[own, nb_sum + 4])
                    assert got == want  # bitwise identical doubles


class TestRecordReplay:
    def test_entry_count_and_determinism(self):
        eng = Engine(DIMS, [2.0], seed=21, init="random")
        rmap = record_engine_randoms(eng, 5)
        assert rmap.n_sweeps == 5
        for k in range(5):
            assert np.isfinite(rmap.draws[k]).all()
        eng2 = Engine(DIMS, [2.0], seed=21, init="random")
        rmap2 = record_engine_randoms(eng2, 5)
        assert (rmap.draws == rmap2.draws).all()

    def test_value_lookup_checks_color(self):
        eng = Engine(DIMS, [2.0], seed=22, init="random")
        rmap = record_engine_randoms(eng, 1)
        v = rmap.value(0, red_phase=True, idx=0)  # site 0 is red
        assert 0.0 <= v < 1.0
        with pytest.raises(KeyError):
            rmap.value(0, red_phase=False, idx=0)

    def test_unfilled_map_lookup_fails(self):
        rmap = RandomMap(DIMS, 1)
        with pytest.raises(KeyError):
            rmap.value(0, red_phase=True, idx=0)

    def test_recording_requires_single_sim(self):
        eng = Engine(DIMS, [2.0, 2.0], seed=23, init="random")
        with pytest.raises(ValueError):
            record_engine_randoms(eng, 1)

    def test_recording_does_not_change_trajectory(self):
        plain = Engine(DIMS, [2.0], seed=24, init="random")
        for _ in range(10):
            plain.sweep()
        recorded = Engine(DIMS, [2.0], seed=24, init="random")
        record_engine_randoms(recorded, 10)
        assert (plain.state == recorded.state).all()

    @pytest.mark.parametrize("T", [0.5, 2.0, 2.269, 5.0])
    def test_bit_exact_equivalence_each_sweep(self, T):
        eng = Engine(DIMS, [T], seed=31, init="random")
        start = eng.lattice(0).copy()
        rmap = record_engine_randoms(eng, 60)
        replay = Engine(DIMS, [T], seed=31, init="random")
        spins = start.copy()
        for k in range(60):
            replay.sweep()
            checkerboard_sweep_plain(spins, T, rmap.for_sweep(k))
            assert (unpack(replay.packed(0)) == spins).all(), f"sweep {k} diverged"

    def test_bit_exact_equivalence_other_dims(self):
        for dims in (LatticeDims(4, 32), LatticeDims(16, 96), LatticeDims(8, 64)):
            eng = Engine(dims, [2.0], seed=37, init="random")
            start = eng.lattice(0).copy()
            rmap = record_engine_randoms(eng, 30)
            replay = Engine(dims, [2.0], seed=37, init="random")
            spins = start.copy()
            for k in range(30):
                replay.sweep()
                checkerboard_sweep_plain(spins, 2.0, rmap.for_sweep(k))
                assert (unpack(replay.packed(0)) == spins).all(), f"{dims}: sweep {k}"
