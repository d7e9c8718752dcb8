import os
import pathlib

import numpy as np
import pytest

import fedboost

DATA = pathlib.Path(os.environ.get("FEDBOOST_DATA_DIR", pathlib.Path(__file__).parents[2] / "data"))

PLAN = """
federation:
  collaborators: 3
  rounds: 5
  seed: 7
  learner: {family: tree, hyperparameters: {max_leaves: 4}}
tasks: [train, weak_learners_validate, adaboost_update, adaboost_validate]
protocol: {poll_interval: 0.001, wait_interval: 0.001}
"""


def blobs(n=150, seed=0):
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 3
    centers = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]])
    return centers[y] + rng.normal(size=(n, 2)), y.astype(np.uint32)


def test_plan_parsing():
    plan = fedboost.parse_plan(PLAN)
    assert plan.collaborators == 3
    assert plan.rounds == 5
    assert plan.mode == "adaboost_f"
    assert plan.retention == 2
    assert fedboost.parse_plan(plan.render()) == plan
    with pytest.raises(fedboost.FedBoostError):
        fedboost.parse_plan(PLAN.replace("collaborators", "colaborators"))


def test_fit_predict_roundtrip():
    X, y = blobs()
    assert set(fedboost.families()) == {"stump", "tree", "gaussian_nb", "knn"}
    for family in fedboost.families():
        model = fedboost.fit(family, X, y, 3)
        again = fedboost.decode_model(family, 1, model.encode())
        np.testing.assert_array_equal(model.predict(X), again.predict(X))


def test_f1_and_split():
    y = np.array([0, 1, 0, 1])
    assert fedboost.f1_macro(np.zeros(4), y, 2) == pytest.approx(1 / 3)
    X, y = blobs(11)
    parts = fedboost.split_iid(X, y, 3, seed=1)
    assert sorted(len(p[1]) for p in parts) == [3, 4, 4]
    (whole,) = fedboost.split_iid(X, y, 1, seed=1)
    np.testing.assert_array_equal(whole[0], X)
    np.testing.assert_array_equal(whole[1], y)


def test_simulate_matches_sequential_for_one_collaborator():
    X, y = blobs()
    plan = fedboost.parse_plan(PLAN)
    plan.collaborators = 1
    out = fedboost.simulate(plan, X, y, 3)
    assert len(out["f1_curve"]) == 5
    assert len(out["ensemble"]) == 5
    assert out["final_f1"] > 0.8
    assert out["report"].strip().splitlines()[-1].startswith('{"summary"')


def test_sequential_and_ensemble_file(tmp_path):
    X, y = blobs()
    ens = fedboost.sequential_adaboost("stump", X, y, 3, rounds=4)
    assert len(ens) == 4
    path = tmp_path / "model.ensemble"
    ens.save(path)
    back = fedboost.load_ensemble(path)
    np.testing.assert_array_equal(ens.predict(X), back.predict(X))
    assert back.alphas == ens.alphas


def test_read_prepared_csv():
    X, y, names = fedboost.read_csv(DATA / "vehicle.csv")
    assert X.shape[1] == 18
    assert len(names) == 4
    assert len(y) == X.shape[0]
    raw = [line.rsplit(",", 1)[1].strip() for line in (DATA / "vehicle.csv").read_text().splitlines()[1:]]
    np.testing.assert_array_equal(y, [names.index(label) for label in raw])
