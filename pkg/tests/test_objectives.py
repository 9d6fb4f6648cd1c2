from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from move import cppn
from move.engine import tally_votes
from move.exceptions import CalibrationError, InvalidArgumentsError, LengthMismatchError
from move.images import sunrise
from move.objectives import (
    DEFAULT_OBJECTIVES,
    ImageProblem,
    NormalizationTable,
    SyntheticObjectives,
    calibrate_table,
    evaluate_all,
    get_registry,
    normalize,
    self_similarity,
    synthetic_objective,
)


def fake_run(raw_min, raw_max, names=("a", "b"), target="t", run_id="r"):
    return SimpleNamespace(raw_min=np.array(raw_min, float), raw_max=np.array(raw_max, float),
                           objective_names=list(names), target_id=target, run_id=run_id)


def test_registry_defaults_and_errors():
    assert [s.name for s in get_registry()] == list(DEFAULT_OBJECTIVES)
    assert len(DEFAULT_OBJECTIVES) == 8
    assert [s.name for s in get_registry(["ssim", "mse"])] == ["ssim", "mse"]
    for bad in ([], ["ssim", "ssim"], ["lpips"]):
        with pytest.raises(InvalidArgumentsError):
            get_registry(bad)


def test_calibration_examples():
    table = calibrate_table([fake_run([0.1, -3], [0.9, -1])], "t")
    assert table.entries[("a", "t")] == (0.1, 0.9)
    table = calibrate_table([fake_run([0.2, -3], [0.8, -1], run_id="x"),
                             fake_run([0.1, -4], [1.0, -2], run_id="y")], "t")
    floor, best = table.arrays(["a", "b"], "t")
    np.testing.assert_allclose(best, [0.9, -1.5])
    np.testing.assert_allclose(floor, [0.1, -4])
    assert table.provenance == {"t": ["x", "y"]}


def test_calibration_degenerate_names_objective():
    with pytest.raises(CalibrationError, match="'b'"):
        calibrate_table([fake_run([0, 1], [1, 1])], "t")
    with pytest.raises(CalibrationError):
        calibrate_table([fake_run([0, 0], [1, 1], target="other")], "t")


def test_normalize_maps_best_and_floor():
    table = calibrate_table([fake_run([-2.0, 0.5], [-1.0, 0.75])], "t")
    out = normalize([[-1.0, 0.75], [-2.0, 0.5]], table, "t", ["a", "b"])
    np.testing.assert_allclose(out, [[1, 1], [0, 0]])
    with pytest.raises(CalibrationError):
        normalize([0.0, 0.0], table, "other", ["a", "b"])
    with pytest.raises(LengthMismatchError):
        normalize([0.0], table, "t", ["a", "b"])


@given(arrays(np.float64, (6, 2), elements=st.floats(-10, 10)))
def test_normalize_preserves_argmax(raw):
    table = calibrate_table([fake_run([-20, -3], [5, 7])], "t")
    out = normalize(raw, table, "t", ["a", "b"])
    # weakly monotone in floating point: the raw argmax still attains the max
    best = np.argmax(raw, axis=0)
    assert (out[best, [0, 1]] == out.max(axis=0)).all()


def test_table_roundtrip(tmp_path):
    table = calibrate_table([fake_run([0.1, -3], [0.9, -1], run_id="r1")], "t")
    table = table.merge(calibrate_table([fake_run([0.0, -2], [0.5, -1], target="u")], "u"))
    path = tmp_path / "norm.yaml"
    table.save(path)
    back = NormalizationTable.load(path)
    assert back.entries == table.entries and back.provenance == table.provenance
    assert back.dumps() == table.dumps()


def test_synthetic_examples():
    assert synthetic_objective(1, [0, 1, 0]) == 0.0
    centroid = np.full(3, 1 / 3)
    for i in range(3):
        assert synthetic_objective(i, centroid) == pytest.approx(-2 / 3)
    fam = SyntheticObjectives.basis(3)
    child, elite = fam.vector([1, 0, 0]), fam.vector([0, 1, 0])
    t = tally_votes(child, elite, (0, 1, 2))
    assert (t.child_votes, t.elite_votes, t.ties) == (1, 1, 1) and not t.child_wins
    with pytest.raises(InvalidArgumentsError):
        fam(3, [0, 0, 0])


def test_image_problem_self_similarity():
    target = sunrise(32, 32)
    reg = get_registry()
    np.testing.assert_array_equal(evaluate_all(target, target, reg), self_similarity(target, reg))


def test_phenotype_only(rng):
    # different structure, same image: identical vectors
    problem = ImageProblem(sunrise(24, 24))
    g = cppn.random_genome(rng)
    extra = cppn.Genome(g.nodes + (cppn.NodeGene(6, "sine", "hidden"),), g.connections,
                        uid=999)
    a, b = problem.evaluate([g, extra])
    np.testing.assert_array_equal(a, b)
    assert problem.evaluations == 2


def test_image_problem_vectors_finite(rng):
    problem = ImageProblem(sunrise(32, 32))
    genomes = [problem.random_genome(rng) for _ in range(20)]
    scores = problem.evaluate(genomes)
    assert scores.shape == (20, 8) and np.isfinite(scores).all()
