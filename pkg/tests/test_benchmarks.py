import csv
import io

import numpy as np
import pytest

from qsynth import simulator as sim
from qsynth.benchmarks import (
    CSV_FIELDS,
    SweepSpec,
    a_matrix,
    build_family,
    loglog_slope,
    qsvt_oracle,
    qsvt_phases,
    rows_to_csv,
    run_baseline,
    run_sweep,
    walk_step_matrix,
)


def test_walk_step_is_a_unitary_shift():
    U = walk_step_matrix(3)
    assert sim.is_unitary(U) and np.allclose(U @ U.conj().T, np.eye(16))


def test_a_matrix_is_a_contraction():
    A = a_matrix(3)
    assert np.linalg.norm(A, 2) <= 1 + 1e-12


def test_qsvt_oracle_shape_and_phases():
    phases = qsvt_phases(3, seed=1)
    assert len(phases) == 4
    assert qsvt_oracle(a_matrix(2), phases).shape == (4, 4)
    assert qsvt_phases(3, seed=1) == phases


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec("nope", [4])
    with pytest.raises(ValueError):
        SweepSpec("walk", [0])
    with pytest.raises(ValueError):
        SweepSpec("walk", [4], timeout=0)


def test_sweep_rows_follow_n_then_width():
    rows = run_sweep(SweepSpec("walk", [3, 4], [None, 7], "cx"))
    assert [(r.N, r.max_width) for r in rows] == [(3, None), (3, 7), (4, None), (4, 7)]
    assert all(r.cx is not None and not r.timeout for r in rows)
    assert rows[1].width <= 7


def test_parallel_sweep_matches_serial():
    spec = SweepSpec("walk", [3, 4, 5], [8], "cx")
    strip = lambda rows: [(r.N, r.width, r.depth, r.cx, r.optimal) for r in rows]
    assert strip(run_sweep(spec, jobs=3)) == strip(run_sweep(spec))


def test_infeasible_row_is_blank():
    (row,) = run_sweep(SweepSpec("walk", [5], [3], "cx"))
    assert row.cx is None and not row.timeout
    assert row.as_csv()["cx"] == "" and row.as_csv()["timeout"] == 0


def test_baseline_uses_no_aux():
    (row,) = run_baseline("walk", [5])
    assert row.width == 6


def test_csv_schema():
    text = rows_to_csv(run_sweep(SweepSpec("walk", [3], [None], "cx")))
    reader = csv.DictReader(io.StringIO(text))
    assert reader.fieldnames == list(CSV_FIELDS)
    (row,) = list(reader)
    assert row["family"] == "walk" and row["N"] == "3" and row["max_width"] == ""


def test_qsvt_family_builds():
    assert build_family("qsvt", 2).num_functional == 6


def test_loglog_slope_recovers_power():
    ns = [4, 8, 16, 32]
    assert loglog_slope(ns, [n ** 2 for n in ns]) == pytest.approx(2.0)
