import json
import struct

import numpy as np
import pytest

from pglrr import (
    ClusteringResult,
    MalformedFile,
    ManifestError,
    SolverConfig,
    build_gram_stack,
    build_laplacian,
    embed,
    lappglrr_solve,
    pgm_dist_sq,
)
from pglrr.manifold import ProductGrassmannPoint, grassmann_from_matrix
from pglrr.data_io import (
    DatasetManifest,
    SampleEntry,
    SynthSpec,
    load_artifact,
    load_dataset,
    read_matrix,
    save_artifact,
    synth_generate,
    write_manifest,
    write_matrix,
)

from helpers import random_dataset, tree_bytes


class TestMatrixFiles:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        M = rng.standard_normal((7, 3))
        write_matrix(tmp_path / "m.pgmx", M)
        back = read_matrix(tmp_path / "m.pgmx")
        assert back.tobytes() == M.tobytes()

    def test_layout(self, tmp_path):
        write_matrix(tmp_path / "m.pgmx", np.array([[1.0, 2.0], [3.0, 4.0]]))
        raw = (tmp_path / "m.pgmx").read_bytes()
        assert raw[:4] == b"PGMX"
        assert struct.unpack("<IQQ", raw[4:24]) == (1, 2, 2)
        assert struct.unpack("<4d", raw[24:]) == (1.0, 2.0, 3.0, 4.0)

    def test_truncated(self, tmp_path, rng):
        path = tmp_path / "m.pgmx"
        write_matrix(path, rng.standard_normal((4, 4)))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(MalformedFile):
            read_matrix(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.pgmx"
        path.write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(MalformedFile):
            read_matrix(path)

    def test_csv_fallback(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1,2\n3,4")
        np.testing.assert_array_equal(read_matrix(path), [[1, 2], [3, 4]])

    def test_csv_round_trip(self, tmp_path, rng):
        M = rng.standard_normal((3, 5))
        write_matrix(tmp_path / "m.csv", M)
        assert read_matrix(tmp_path / "m.csv").tobytes() == M.tobytes()

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_matrix(tmp_path / "absent.pgmx")


def _manifest(tmp_path, mats, labels=None, dims=((3, 2),)):
    samples = []
    for i, views in enumerate(mats):
        paths = []
        for m, S in enumerate(views):
            rel = f"s{i}_v{m}.pgmx"
            write_matrix(tmp_path / rel, S)
            paths.append(rel)
        samples.append(SampleEntry(id=f"s{i}", view_paths=paths, label=None if labels is None else labels[i]))
    path = tmp_path / "manifest.json"
    write_manifest(path, DatasetManifest(name="t", view_dims=list(dims), samples=samples))
    return path


class TestLoadDataset:
    def test_diagonal_samples(self, tmp_path):
        path = _manifest(tmp_path, [[np.diag([3.0, 2.0, 1.0])], [np.diag([1.0, 2.0, 3.0])]], labels=[0, 1])
        points, labels, _ = load_dataset(path)
        np.testing.assert_allclose(embed(points[0].views[0]), np.diag([1, 1, 0]), atol=1e-12)
        np.testing.assert_allclose(embed(points[1].views[0]), np.diag([0, 1, 1]), atol=1e-12)
        np.testing.assert_array_equal(labels, [0, 1])

    def test_missing_file_names_sample(self, tmp_path):
        path = _manifest(tmp_path, [[np.eye(3)], [np.eye(3)]])
        (tmp_path / "s1_v0.pgmx").unlink()
        with pytest.raises(ManifestError, match="s1"):
            load_dataset(path)

    def test_row_mismatch(self, tmp_path):
        path = _manifest(tmp_path, [[np.eye(3)], [np.eye(4)]])
        with pytest.raises(ManifestError, match="rows"):
            load_dataset(path)

    def test_subspace_override(self, tmp_path):
        path = _manifest(tmp_path, [[np.eye(3)], [np.eye(3)]])
        points, labels, _ = load_dataset(path, subspace_dims=[1])
        assert points[0].view_dims == [(3, 1)] and labels is None

    def test_partial_labels_rejected(self, tmp_path):
        path = _manifest(tmp_path, [[np.eye(3)], [np.eye(3)]], labels=[0, 1])
        doc = json.loads(path.read_text())
        doc["samples"][1]["label"] = None
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestError):
            load_dataset(path)

    def test_wrong_view_count(self, tmp_path):
        path = _manifest(tmp_path, [[np.eye(3)], [np.eye(3)]])
        doc = json.loads(path.read_text())
        doc["samples"][0]["view_paths"].append("extra.pgmx")
        path.write_text(json.dumps(doc))
        with pytest.raises(ManifestError):
            load_dataset(path)


class TestSynth:
    def test_noise_free_recovers_bases(self, tmp_path):
        spec = SynthSpec(k=2, view_dims=((10, 3),), samples_per_cluster=3, frames=6, noise_sigma=0.0, seed=3)
        points, labels, _ = load_dataset(synth_generate(spec, tmp_path))
        # regenerate the cluster bases with the same draw order
        rng = np.random.default_rng(3)
        bases = [np.linalg.qr(rng.standard_normal((10, 3)))[0] for _ in range(2)]
        for pt, lab in zip(points, labels):
            P = bases[lab] @ bases[lab].T
            assert np.linalg.norm(embed(pt.views[0]) - P) < 1e-9
        for i in range(len(points)):
            for j in range(len(points)):
                if labels[i] == labels[j]:
                    assert pgm_dist_sq(points[i], points[j]) <= 1e-8

    def test_deterministic(self, tmp_path):
        spec = SynthSpec(k=2, view_dims=((8, 2), (6, 2)), samples_per_cluster=4, frames=5, seed=11)
        synth_generate(spec, tmp_path / "a")
        synth_generate(spec, tmp_path / "b")
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_separation_census(self, tmp_path):
        spec = SynthSpec(k=3, view_dims=((30, 5), (30, 5)), samples_per_cluster=10, frames=40, noise_sigma=0.01, seed=0)
        points, labels, _ = load_dataset(synth_generate(spec, tmp_path))
        n = len(points)
        d = np.array([[pgm_dist_sq(points[i], points[j]) for j in range(n)] for i in range(n)])
        same = labels[:, None] == labels[None, :]
        off = ~np.eye(n, dtype=bool)
        within = d[same & off]
        between = d[~same]
        frac = np.mean(between[:, None] > within[None, :])
        assert frac >= 0.95

    def test_round_trip_gram(self, tmp_path):
        spec = SynthSpec(k=2, view_dims=((12, 3),), samples_per_cluster=4, frames=8, seed=5)
        points, _, _ = load_dataset(synth_generate(spec, tmp_path))
        # rebuild in memory with the identical draw sequence
        rng = np.random.default_rng(5)
        bases = [[np.linalg.qr(rng.standard_normal((12, 3)))[0]] for _ in range(2)]
        labels = np.repeat(np.arange(2), 4)[rng.permutation(8)]
        mem = []
        for lab in labels:
            S = bases[lab][0] @ rng.standard_normal((3, 8)) + 0.02 * rng.standard_normal((12, 8))
            mem.append(ProductGrassmannPoint((grassmann_from_matrix(S, 3),)))
        assert np.abs(build_gram_stack(points).total - build_gram_stack(mem).total).max() <= 1e-12

    @pytest.mark.parametrize("kw", [{"k": 1}, {"frames": 2}, {"noise_sigma": -1.0}])
    def test_invalid_spec(self, tmp_path, kw):
        with pytest.raises(ValueError):
            synth_generate(SynthSpec(**kw), tmp_path)


class TestArtifacts:
    def test_gram_round_trip(self, tmp_path, rng):
        G = build_gram_stack(random_dataset(rng, 5, [(6, 2), (7, 3)]))
        save_artifact(tmp_path / "g", G)
        back = load_artifact(tmp_path / "g", kind="gram_stack")
        assert back.total.tobytes() == G.total.tobytes()
        assert back.per_view.tobytes() == G.per_view.tobytes()
        assert back.view_dims == G.view_dims

    def test_laplacian_round_trip(self, tmp_path, rng):
        lap = build_laplacian(random_dataset(rng, 4, [(5, 2)]))
        save_artifact(tmp_path / "l", lap)
        back = load_artifact(tmp_path / "l")
        assert back.L.tobytes() == lap.L.tobytes() and back.W.tobytes() == lap.W.tobytes()

    def test_coefficients_round_trip(self, tmp_path, rng):
        G = build_gram_stack(random_dataset(rng, 5, [(6, 2)]))
        coef = lappglrr_solve(G, None, SolverConfig(lam=1.0))
        save_artifact(tmp_path / "c", coef)
        back = load_artifact(tmp_path / "c", kind="coefficient_matrix")
        assert back.Z.tobytes() == coef.Z.tobytes()
        assert (back.iterations, back.converged, back.final_gap, back.objective) == (
            coef.iterations, coef.converged, coef.final_gap, coef.objective,
        )

    @pytest.mark.parametrize("acc", [None, 0.75])
    def test_result_round_trip(self, tmp_path, rng, acc):
        res = ClusteringResult(labels=np.array([0, 2, 1, 1]), affinity=rng.random((4, 4)), k=3, accuracy=acc)
        save_artifact(tmp_path / "r", res)
        back = load_artifact(tmp_path / "r", kind="clustering_result")
        np.testing.assert_array_equal(back.labels, res.labels)
        assert back.affinity.tobytes() == res.affinity.tobytes()
        assert back.k == 3 and back.accuracy == acc

    def test_kind_mismatch(self, tmp_path, rng):
        save_artifact(tmp_path / "g", build_gram_stack(random_dataset(rng, 3, [(4, 2)])))
        with pytest.raises(MalformedFile, match="kind mismatch"):
            load_artifact(tmp_path / "g", kind="clustering_result")

    def test_missing_header(self, tmp_path):
        with pytest.raises(MalformedFile):
            load_artifact(tmp_path)

    def test_unsupported_type(self, tmp_path):
        with pytest.raises(TypeError):
            save_artifact(tmp_path / "x", object())
