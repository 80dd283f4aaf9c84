import json

import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qsynth.benchmarks import build_walk_model, walk_document
from qsynth.estimator import QuantumSynthesizer, as_model
from qsynth.model import serialize


def test_unfitted_transform_raises():
    with pytest.raises(NotFittedError):
        QuantumSynthesizer().transform()


def test_fit_transform_and_attributes():
    est = QuantumSynthesizer(max_width=8, objective="cx")
    circuit = est.fit_transform(build_walk_model(3))
    assert circuit is est.circuit_ and est.metrics_.width <= 8
    assert est.optimal_ and est.elapsed_ >= 0


def test_params_round_trip_through_clone():
    est = QuantumSynthesizer(max_width=9, objective="depth", seed=3)
    assert clone(est).get_params() == est.get_params()
    assert est.set_params(max_cx=100).max_cx == 100


@pytest.mark.parametrize("kind", ["dict", "text", "path", "str-path"])
def test_model_inputs(kind, tmp_path):
    doc = walk_document(2)
    path = tmp_path / "walk.json"
    path.write_text(json.dumps(doc))
    source = {"dict": doc, "text": json.dumps(doc), "path": path, "str-path": str(path)}[kind]
    assert serialize(as_model(source)) == serialize(as_model(doc))


def test_bad_inputs():
    with pytest.raises(TypeError):
        as_model(42)
    with pytest.raises(ValueError):
        QuantumSynthesizer(objective="t").fit(build_walk_model(2))
    with pytest.raises(ValueError):
        QuantumSynthesizer(strategies=["nope"]).fit(build_walk_model(2))


def test_report_json_matches_solution():
    est = QuantumSynthesizer(objective="cx").fit(build_walk_model(3))
    assert json.loads(est.report_json()) == json.loads(json.dumps(est.solution_.report()))
