"""End-to-end smoke checks for the Python surface."""

import json
import math
from pathlib import Path

import pytest

import weakties

FIXTURES = Path(__file__).resolve().parents[2] / "tests" / "fixtures"


def test_version_is_semver():
    major, minor, patch = weakties.__version__.split(".")
    assert all(part.isdigit() for part in (major, minor, patch))


def test_triangle_census_counts_and_degenerate_case():
    square_with_diagonal = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a"), ("a", "c")]
    census = weakties.triangle_census(square_with_diagonal)
    assert census["triangles"] == 2
    assert census["triads"] == 8
    assert math.isclose(census["transitivity"], 6 / 8)

    assert weakties.triangle_census([("a", "b")])["transitivity"] is None


def test_train_embeddings_shapes_and_determinism():
    sentences = [["red", "green", "blue"], ["red", "blue"], ["green", "blue", "cyan"]] * 5
    first = weakties.train_embeddings(sentences, d=8, epochs=2, seed=11)
    second = weakties.train_embeddings(sentences, d=8, epochs=2, seed=11)
    assert set(first) == {"red", "green", "blue", "cyan"}
    assert all(len(vec) == 8 for vec in first.values())
    assert first == second


def test_pairwise_distinctness_matches_hand_computation():
    assert weakties.pairwise_distinctness([[1.0, 0.0]]) is None
    opposed = weakties.pairwise_distinctness([[1.0, 0.0], [-1.0, 0.0]])
    assert math.isclose(opposed, 1.0)
    orthogonal = weakties.pairwise_distinctness([[1.0, 0.0], [0.0, 1.0]])
    assert math.isclose(orthogonal, 0.0, abs_tol=1e-12)


def test_pca_on_planted_two_variable_correlation():
    rows = [[x, 2.0 * x] for x in (-2.0, -1.0, 0.0, 1.0, 2.0)]
    fit = weakties.pca(rows)
    assert len(fit["loadings"]) == 2
    assert math.isclose(fit["explained_variance_ratio"][0], 1.0, abs_tol=1e-9)
    # sign convention: component columns sum positive
    assert fit["loadings"][0][0] > 0 and fit["loadings"][1][0] > 0


def test_ols_recovers_noiseless_coefficients():
    rows = [[1.0 + 2.0 * x - 0.5 * z, x, z] for x, z in [(0, 1), (1, 0), (2, 3), (3, 1), (4, 4), (5, 2)]]
    fit = weakties.ols(["y", "x", "z"], rows, "y", ["x", "z"])
    by_name = {t["name"]: t["coef"] for t in fit["terms"]}
    assert math.isclose(by_name["x"], 2.0, abs_tol=1e-9)
    assert math.isclose(by_name["z"], -0.5, abs_tol=1e-9)
    assert math.isclose(fit["adjusted_r2"], 1.0, abs_tol=1e-9)


def test_ols_listwise_deletion_and_errors():
    rows = [[1.0, 1.0], [None, 2.0], [3.0, None], [4.0, 4.0], [5.0, 5.0], [2.0, 2.0]]
    fit = weakties.ols(["y", "x"], rows, "y", ["x"])
    assert fit["n_observations"] == 4

    with pytest.raises(weakties.DataError):
        weakties.ols(["y", "x"], [[1.0, 1.0]], "y", ["x"])


def test_full_pipeline_on_synthetic_corpus(tmp_path):
    corpus_dir = tmp_path / "corpus"
    stats = weakties.generate_corpus(str(corpus_dir), projects=40, clusters=4, effect=0.3, seed=99)
    assert stats["projects"] == 40
    assert stats["events"] > 0

    config = json.loads((FIXTURES / "config.json").read_text())
    for key in ("events", "projects", "imports", "bots", "awesome"):
        config[key] = str(corpus_dir / Path(config[key]).name)
    config["output_dir"] = str(tmp_path / "out")
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config))

    manifest = weakties.run_pipeline(str(config_path))
    assert [stage["name"] for stage in manifest["stages"]] == [
        "ingest",
        "networks",
        "embed",
        "features",
        "pca",
        "regress",
        "report",
    ]
    assert "features.csv" in manifest["outputs"]
    assert "regression.json" in manifest["outputs"]

    regression = json.loads((tmp_path / "out" / "regression.json").read_text())
    names = {term["name"] for term in regression["terms"]}
    assert {"div_ave", "div_weakness"} <= names

    # the manifest digest matches the bytes on disk
    features = (tmp_path / "out" / "features.csv").read_bytes()
    import hashlib

    assert manifest["outputs"]["features.csv"] == hashlib.sha256(features).hexdigest()


def test_bad_config_raises_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"evnets": "x.jsonl"}))
    with pytest.raises(weakties.ConfigError):
        weakties.run_pipeline(str(bad))
