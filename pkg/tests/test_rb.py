import math

import numpy as np
import pytest

from quditdd.fitting import fit_rb
from quditdd.rb import (
    GateErrorModel,
    HALF_ROTATIONS,
    N_HALF_GATES,
    N_PI_GATES,
    PI_ROTATIONS,
    RbData,
    RbSequence,
    generate_rb_sequence,
    read_rb_csv,
    run_rb,
    sequence_survival,
    write_rb_csv,
)

CARDINALS = [
    np.array(v, dtype=np.int64)
    for v in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))
]


class TestGateTables:
    def test_sizes(self):
        assert N_PI_GATES == 8
        assert N_HALF_GATES == 6

    def test_rotations_are_special_orthogonal_integers(self):
        for rot in PI_ROTATIONS + HALF_ROTATIONS:
            assert rot.dtype == np.int64
            assert np.array_equal(rot.T @ rot, np.eye(3, dtype=np.int64))
            assert round(np.linalg.det(rot)) == 1

    def test_idle_slots_are_identity(self):
        identity = np.eye(3, dtype=np.int64)
        assert np.array_equal(PI_ROTATIONS[0], identity)
        assert np.array_equal(PI_ROTATIONS[1], identity)
        assert np.array_equal(HALF_ROTATIONS[0], identity)
        assert np.array_equal(HALF_ROTATIONS[1], identity)

    def test_closing_gate_exists_for_every_cardinal(self):
        # the closing rule must terminate for any reachable ideal vector
        for v in CARDINALS:
            hits = [i for i, rot in enumerate(HALF_ROTATIONS) if (rot @ v)[2] != 0]
            assert hits, f"no closing gate for {v}"
            closed = HALF_ROTATIONS[hits[0]] @ v
            assert abs(closed[2]) == 1

    def test_z_aligned_closes_with_identity(self):
        for v in (np.array([0, 0, 1]), np.array([0, 0, -1])):
            closer = next(
                i for i, rot in enumerate(HALF_ROTATIONS) if (rot @ v)[2] != 0
            )
            assert closer == 0


class TestSequenceGeneration:
    @pytest.mark.parametrize("length", [0, 1, 2, 5, 16])
    def test_structure_and_closure(self, length):
        rng = np.random.default_rng(1234 + length)
        seq = generate_rb_sequence(length, rng)
        assert seq.length == length
        assert seq.n_gates == 2 * length + 3
        assert len(seq.pi_indices) == length + 2
        assert len(seq.half_indices) == length + 1
        assert len(seq.gates()) == 2 * length + 3
        # replay the ideal gates: the net vector must sit exactly on the
        # measurement axis and match the recorded target
        v = np.array([0, 0, 1], dtype=np.int64)
        for kind, idx in seq.gates():
            table = PI_ROTATIONS if kind == "pi" else HALF_ROTATIONS
            v = table[idx] @ v
        assert tuple(v[:2]) == (0, 0)
        assert v[2] == seq.target
        assert seq.target in (1, -1)

    def test_negative_length_rejected(self):
        with pytest.raises(ValueError):
            generate_rb_sequence(-1, np.random.default_rng(0))

    def test_pi_draws_are_uniform(self):
        counts = np.zeros(N_PI_GATES)
        n_seq, length = 3000, 10
        for si in range(n_seq):
            seq = generate_rb_sequence(length, np.random.default_rng(50_000 + si))
            for idx in seq.pi_indices:
                counts[idx] += 1
        total = counts.sum()
        expected = total / N_PI_GATES
        # fixed seeds: 4 sigma of the binomial per-bin spread
        sigma = math.sqrt(total * (1 / N_PI_GATES) * (1 - 1 / N_PI_GATES))
        assert np.max(np.abs(counts - expected)) < 4.0 * sigma


class TestSurvival:
    def test_error_free_is_unity(self):
        for length in (0, 3, 11):
            seq = generate_rb_sequence(length, np.random.default_rng(length))
            assert sequence_survival(seq, GateErrorModel()) == 1.0

    def test_pure_depolarizing_closed_form(self):
        # every slot shrinks the vector by (1-p), so survival is
        # exactly (1 + (1-p)^(2l+3)) / 2 for any sequence
        p = 0.01
        errors = GateErrorModel(depolarizing=p)
        for length in (0, 2, 9):
            seq = generate_rb_sequence(length, np.random.default_rng(7 + length))
            expected = 0.5 * (1.0 + (1.0 - p) ** (2 * length + 3))
            assert sequence_survival(seq, errors) == pytest.approx(expected, abs=1e-12)

    def test_angle_noise_skips_idle_and_drive_axis(self):
        noisy = GateErrorModel(angle_error_std=0.3)
        all_idle = RbSequence(length=0, pi_indices=(0, 1), half_indices=(0,), target=1)
        assert sequence_survival(all_idle, noisy) == 1.0
        # pi about z keeps the vector on the drive axis: nothing damps
        z_only = RbSequence(length=0, pi_indices=(6, 7), half_indices=(0,), target=1)
        assert sequence_survival(z_only, noisy) == 1.0

    def test_angle_noise_transverse_damping(self):
        # two pi-x gates: the vector is transverse to x both times, so
        # each applies the full exp(-std^2/2) factor
        std = 0.25
        seq = RbSequence(length=0, pi_indices=(2, 2), half_indices=(0,), target=1)
        expected = 0.5 * (1.0 + math.exp(-(std**2)))
        assert sequence_survival(seq, GateErrorModel(angle_error_std=std)) == pytest.approx(
            expected, abs=1e-14
        )

    def test_sequence_validation(self):
        with pytest.raises(ValueError):
            RbSequence(length=1, pi_indices=(0, 0), half_indices=(0, 0), target=1)
        with pytest.raises(ValueError):
            RbSequence(length=1, pi_indices=(0, 0, 0), half_indices=(0,), target=1)
        with pytest.raises(ValueError):
            RbSequence(length=0, pi_indices=(0, 0), half_indices=(0,), target=0)

    def test_error_model_validation(self):
        with pytest.raises(ValueError):
            GateErrorModel(depolarizing=-0.1)
        with pytest.raises(ValueError):
            GateErrorModel(depolarizing=1.5)
        with pytest.raises(ValueError):
            GateErrorModel(angle_error_std=-1.0)


class TestRunRb:
    def test_deterministic(self):
        errors = GateErrorModel(depolarizing=0.004, angle_error_std=0.05)
        a = run_rb(errors, [0, 2, 8], n_sequences=12, shots=64, seed=5)
        b = run_rb(errors, [0, 2, 8], n_sequences=12, shots=64, seed=5)
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.stderr, b.stderr)

    def test_depolarizing_means_track_closed_form(self):
        p = 0.01
        data = run_rb(GateErrorModel(depolarizing=p), [0, 4, 16, 64],
                      n_sequences=30, shots=500, seed=19)
        for li, length in enumerate(data.lengths):
            expected = 0.5 * (1.0 + (1.0 - p) ** (2 * int(length) + 3))
            margin = 4.0 * max(data.stderr[li], 1e-3)
            assert abs(data.mean[li] - expected) < margin

    def test_shot_noise_scaling(self):
        # pure depolarizing gives every sequence the same survival, so
        # the spread across sequences is pure binomial shot noise and
        # quadrupling shots should halve the stderr
        errors = GateErrorModel(depolarizing=0.005)
        small = run_rb(errors, [8], n_sequences=400, shots=250, seed=23)
        big = run_rb(errors, [8], n_sequences=400, shots=1000, seed=24)
        ratio = small.stderr[0] / big.stderr[0]
        assert ratio == pytest.approx(2.0, rel=0.2)

    def test_end_to_end_error_recovery(self):
        p = 0.002
        data = run_rb(GateErrorModel(depolarizing=p), [0, 2, 8, 32, 128],
                      n_sequences=40, shots=400, seed=77)
        result = fit_rb(data.lengths, data.mean, data.stderr, bootstrap=0)
        # depolarizing v -> (1-p)v twice per cycle: r = (1-p)^2, so the
        # per-cycle error is eps = p - p^2/2
        expected = p - p * p / 2.0
        assert result.params["epsilon"] == pytest.approx(expected, rel=0.25)

    def test_validation(self):
        errors = GateErrorModel()
        with pytest.raises(ValueError, match="distinct"):
            run_rb(errors, [1, 1, 2], n_sequences=5, shots=10)
        with pytest.raises(ValueError, match="sequences"):
            run_rb(errors, [1, 2], n_sequences=1, shots=10)
        with pytest.raises(ValueError, match="shots"):
            run_rb(errors, [1, 2], n_sequences=5, shots=0)


class TestRbCsv:
    def test_round_trip(self, tmp_path):
        data = run_rb(GateErrorModel(depolarizing=0.003), [0, 3, 9],
                      n_sequences=8, shots=50, seed=2)
        path = tmp_path / "rb.csv"
        write_rb_csv(path, data, metadata={"config.note": "spot check"})
        loaded, metadata = read_rb_csv(path)
        assert np.array_equal(loaded.lengths, data.lengths)
        assert np.array_equal(loaded.mean, data.mean)
        assert np.array_equal(loaded.stderr, data.stderr)
        assert loaded.n_sequences == data.n_sequences
        assert loaded.shots == data.shots
        assert loaded.seed == data.seed
        assert metadata == {"config.note": "spot check"}

    def test_wrong_schema_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="columns"):
            read_rb_csv(path)

    def test_inconsistent_rows_rejected(self, tmp_path):
        path = tmp_path / "mixed.csv"
        path.write_text(
            "l,mean,stderr,sequences,shots,seed\n"
            "0,0.9,0.01,8,50,2\n"
            "3,0.8,0.01,8,60,2\n"
        )
        with pytest.raises(ValueError, match="inconsistent"):
            read_rb_csv(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("l,mean,stderr,sequences,shots,seed\n")
        with pytest.raises(ValueError, match="no data"):
            read_rb_csv(path)
