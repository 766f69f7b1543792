"""File formats, dataset manifests, artifact persistence and synthetic data.

Matrix files (``.pgmx``) are a 24-byte header followed by a row-major
little-endian float64 payload::

    offset  size  field
    0       4     magic  b"PGMX"
    4       4     version (u32, currently 1)
    8       8     rows    (u64)
    16      8     cols    (u64)
    24      8*r*c payload

Files ending in ``.csv`` are read (and written) as comma-separated decimal
text instead.

A dataset manifest is a JSON document listing, for each sample, one matrix
file per view.  Each view file holds a ``d_m x n`` frame matrix whose columns
are the sample's frames flattened in row-major order.  Pixel normalisation
and resizing are the caller's business and are never applied here.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .clustering import ClusteringResult
from .errors import DegenerateInput, DimensionError, MalformedFile, ManifestError
from .gram import GramStack
from .manifold import ProductGrassmannPoint, grassmann_from_matrix
from .solvers import CoefficientMatrix, LaplacianPair

MAGIC = b"PGMX"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")

MANIFEST_FORMAT = "pglrr-manifest"
MANIFEST_VERSION = 1
ARTIFACT_FORMAT = "pglrr-artifact"
ARTIFACT_VERSION = 1
HEADER_NAME = "header.json"


def _dump_json(obj, path: Path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    path.write_text(text, encoding="utf-8")


# -- matrix files -----------------------------------------------------------


def write_matrix(path, matrix) -> None:
    path = Path(path)
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise DimensionError(f"can only write 2-D matrices, got shape {M.shape}")
    if path.suffix.lower() == ".csv":
        np.savetxt(path, M, delimiter=",", fmt="%.17g")
        return
    payload = np.ascontiguousarray(M, dtype="<f8").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, M.shape[0], M.shape[1]))
        fh.write(payload)


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        try:
            return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
        except ValueError as exc:
            raise MalformedFile(f"{path}: cannot parse CSV: {exc}") from exc
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise MalformedFile(f"{path}: file too short for a matrix header")
    magic, version, rows, cols = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MalformedFile(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise MalformedFile(f"{path}: unsupported matrix version {version}")
    expected = rows * cols * 8
    got = len(data) - _HEADER.size
    if got != expected:
        raise MalformedFile(f"{path}: payload is {got} bytes, expected {expected}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size, count=rows * cols)
    return flat.astype(np.float64).reshape(rows, cols)


# -- manifests --------------------------------------------------------------


@dataclass
class SampleEntry:
    id: str
    view_paths: list
    label: Optional[int] = None


@dataclass
class DatasetManifest:
    name: str
    view_dims: list  # [(d_m, p_m), ...]
    samples: list = field(default_factory=list)
    root: Path = Path(".")  # directory relative paths resolve against

    @property
    def n_views(self) -> int:
        return len(self.view_dims)

    @property
    def labels(self) -> Optional[np.ndarray]:
        if not self.samples or self.samples[0].label is None:
            return None
        return np.array([s.label for s in self.samples], dtype=np.int64)

    def validate(self) -> None:
        if not self.view_dims:
            raise ManifestError("manifest declares no views")
        for m, (d, p) in enumerate(self.view_dims):
            if not (isinstance(d, int) and isinstance(p, int) and 1 <= p <= d):
                raise ManifestError(f"view {m}: invalid dims (d={d}, p={p})")
        has_label = [s.label is not None for s in self.samples]
        if any(has_label) and not all(has_label):
            raise ManifestError("labels must be given for all samples or none")
        seen = set()
        for s in self.samples:
            if s.id in seen:
                raise ManifestError(f"duplicate sample id {s.id!r}")
            seen.add(s.id)
            if len(s.view_paths) != self.n_views:
                raise ManifestError(
                    f"sample {s.id!r} lists {len(s.view_paths)} views, expected {self.n_views}"
                )

    def to_json(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "name": self.name,
            "n_views": self.n_views,
            "views": [{"ambient_dim": d, "subspace_dim": p} for d, p in self.view_dims],
            "samples": [
                {"id": s.id, "label": s.label, "view_paths": list(s.view_paths)}
                for s in self.samples
            ],
        }


def read_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from exc
    if doc.get("format") != MANIFEST_FORMAT:
        raise ManifestError(f"{path}: not a {MANIFEST_FORMAT} document")
    if doc.get("version") != MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {doc.get('version')}")
    try:
        views = [(int(v["ambient_dim"]), int(v["subspace_dim"])) for v in doc["views"]]
        samples = [
            SampleEntry(
                id=str(s["id"]),
                view_paths=[str(p) for p in s["view_paths"]],
                label=None if s.get("label") is None else int(s["label"]),
            )
            for s in doc["samples"]
        ]
        name = str(doc.get("name", path.stem))
        n_views = int(doc.get("n_views", len(views)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: missing or malformed field: {exc}") from exc
    if n_views != len(views):
        raise ManifestError(f"{path}: n_views={n_views} but {len(views)} views described")
    manifest = DatasetManifest(name=name, view_dims=views, samples=samples, root=path.parent)
    manifest.validate()
    return manifest


def write_manifest(path, manifest: DatasetManifest) -> None:
    manifest.validate()
    _dump_json(manifest.to_json(), Path(path))


def load_dataset(manifest_path, subspace_dims: Optional[Sequence[int]] = None):
    """Read every sample's view matrices and turn them into Grassmann points.

    Returns ``(points, labels, manifest)``; ``labels`` is ``None`` when the
    manifest carries none.  ``subspace_dims`` overrides the manifest's
    per-view ``p_m``.
    """
    manifest = read_manifest(manifest_path)
    dims = list(manifest.view_dims)
    if subspace_dims is not None:
        if len(subspace_dims) != manifest.n_views:
            raise ManifestError(
                f"got {len(subspace_dims)} subspace dims for {manifest.n_views} views"
            )
        dims = [(d, int(p)) for (d, _), p in zip(dims, subspace_dims)]
        manifest.view_dims = dims
        manifest.validate()

    points = []
    for sample in manifest.samples:
        bases = []
        for m, rel in enumerate(sample.view_paths):
            fpath = manifest.root / rel
            if not fpath.is_file():
                raise ManifestError(f"sample {sample.id!r}: view {m} file not found: {fpath}")
            S = read_matrix(fpath)
            d, p = dims[m]
            if S.shape[0] != d:
                raise ManifestError(
                    f"sample {sample.id!r}: view {m} has {S.shape[0]} rows, manifest says {d}"
                )
            try:
                bases.append(grassmann_from_matrix(S, p))
            except (DegenerateInput, DimensionError) as exc:
                raise type(exc)(f"sample {sample.id!r}, view {m}: {exc}") from exc
        points.append(ProductGrassmannPoint(tuple(bases)))
    return points, manifest.labels, manifest


# -- synthetic data ---------------------------------------------------------


@dataclass(frozen=True)
class SynthSpec:
    """Union-of-subspaces benchmark: one random subspace per (cluster, view)."""

    k: int = 3
    view_dims: tuple = ((30, 5), (30, 5))  # (d_m, p_m) per view
    samples_per_cluster: int = 20
    frames: int = 40
    noise_sigma: float = 0.02
    seed: int = 0
    name: str = "synthetic"

    def validate(self) -> None:
        if self.k < 2:
            raise ValueError(f"need at least 2 clusters, got k={self.k}")
        if not self.view_dims:
            raise ValueError("need at least one view")
        if self.samples_per_cluster < 1:
            raise ValueError("samples_per_cluster must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        for m, (d, p) in enumerate(self.view_dims):
            if not 1 <= p <= d:
                raise ValueError(f"view {m}: need 1 <= p <= d, got d={d}, p={p}")
            if self.frames < p:
                raise ValueError(
                    f"view {m}: frames per sample (n={self.frames}) must be >= p={p}"
                )


def synth_generate(spec: SynthSpec, out_dir) -> Path:
    """Write a synthetic multi-view dataset and its manifest; return the manifest path.

    Each sample's view matrix is ``U_km @ G + noise_sigma * E`` with ``U_km``
    the cluster's orthonormal base for that view and ``G``, ``E`` standard
    Gaussian.  Sample order is shuffled; output is a pure function of
    ``spec``.
    """
    spec.validate()
    out_dir = Path(out_dir)
    data_dir = out_dir / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)

    bases = [
        [np.linalg.qr(rng.standard_normal((d, p)))[0] for d, p in spec.view_dims]
        for _ in range(spec.k)
    ]
    n_total = spec.k * spec.samples_per_cluster
    labels = np.repeat(np.arange(spec.k), spec.samples_per_cluster)
    labels = labels[rng.permutation(n_total)]

    width = max(4, len(str(n_total - 1)))
    samples = []
    for i, lab in enumerate(labels):
        sid = f"s{i:0{width}d}"
        paths = []
        for m, (d, p) in enumerate(spec.view_dims):
            coeff = rng.standard_normal((p, spec.frames))
            noise = rng.standard_normal((d, spec.frames))
            S = bases[lab][m] @ coeff + spec.noise_sigma * noise
            rel = f"data/{sid}_v{m}.pgmx"
            write_matrix(out_dir / rel, S)
            paths.append(rel)
        samples.append(SampleEntry(id=sid, view_paths=paths, label=int(lab)))

    manifest = DatasetManifest(
        name=spec.name,
        view_dims=[tuple(v) for v in spec.view_dims],
        samples=samples,
        root=out_dir,
    )
    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest_path, manifest)
    return manifest_path


# -- artifacts --------------------------------------------------------------

_KINDS = {
    GramStack: "gram_stack",
    LaplacianPair: "laplacian",
    CoefficientMatrix: "coefficient_matrix",
    ClusteringResult: "clustering_result",
}


def save_artifact(path, obj) -> None:
    """Persist a pipeline object as a directory of matrix files plus ``header.json``."""
    kind = _KINDS.get(type(obj))
    if kind is None:
        raise TypeError(f"cannot save objects of type {type(obj).__name__}")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    header = {"format": ARTIFACT_FORMAT, "version": ARTIFACT_VERSION, "kind": kind}
    matrices = {}

    if isinstance(obj, GramStack):
        header["view_dims"] = [list(v) for v in obj.view_dims]
        for m in range(obj.n_views):
            matrices[f"per_view_{m}"] = obj.per_view[m]
        matrices["total"] = obj.total
    elif isinstance(obj, LaplacianPair):
        matrices.update(W=obj.W, L=obj.L)
    elif isinstance(obj, CoefficientMatrix):
        header.update(
            iterations=int(obj.iterations),
            converged=bool(obj.converged),
            final_gap=float(obj.final_gap),
            objective=float(obj.objective),
        )
        matrices["Z"] = obj.Z
    else:
        header.update(
            k=int(obj.k),
            accuracy=None if obj.accuracy is None else float(obj.accuracy),
        )
        matrices["labels"] = np.asarray(obj.labels, dtype=np.float64)[:, None]
        matrices["affinity"] = obj.affinity

    header["matrices"] = {}
    for name, M in matrices.items():
        fname = f"{name}.pgmx"
        write_matrix(path / fname, M)
        header["matrices"][name] = fname
    _dump_json(header, path / HEADER_NAME)


def load_artifact(path, kind: Optional[str] = None):
    """Load an artifact directory; ``kind`` (if given) must match what is stored."""
    path = Path(path)
    hpath = path / HEADER_NAME
    try:
        header = json.loads(hpath.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise MalformedFile(f"{path}: no {HEADER_NAME} found") from exc
    except json.JSONDecodeError as exc:
        raise MalformedFile(f"{hpath}: invalid JSON: {exc}") from exc
    if header.get("format") != ARTIFACT_FORMAT or header.get("version") != ARTIFACT_VERSION:
        raise MalformedFile(f"{hpath}: not a version-{ARTIFACT_VERSION} {ARTIFACT_FORMAT}")
    stored = header.get("kind")
    if kind is not None and stored != kind:
        raise MalformedFile(f"{path}: kind mismatch, expected {kind!r} but found {stored!r}")
    try:
        mats = {name: read_matrix(path / fname) for name, fname in header["matrices"].items()}
        if stored == "gram_stack":
            dims = tuple(tuple(int(x) for x in v) for v in header["view_dims"])
            per_view = np.stack([mats[f"per_view_{m}"] for m in range(len(dims))])
            return GramStack(per_view=per_view, total=mats["total"], view_dims=dims)
        if stored == "laplacian":
            return LaplacianPair(W=mats["W"], L=mats["L"])
        if stored == "coefficient_matrix":
            return CoefficientMatrix(
                Z=mats["Z"],
                iterations=int(header["iterations"]),
                converged=bool(header["converged"]),
                final_gap=float(header["final_gap"]),
                objective=float(header["objective"]),
            )
        if stored == "clustering_result":
            acc = header["accuracy"]
            return ClusteringResult(
                labels=mats["labels"][:, 0].astype(np.int64),
                affinity=mats["affinity"],
                k=int(header["k"]),
                accuracy=None if acc is None else float(acc),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFile(f"{path}: incomplete {stored} artifact: {exc}") from exc
    except FileNotFoundError as exc:
        raise MalformedFile(f"{path}: missing matrix file: {exc.filename}") from exc
    raise MalformedFile(f"{path}: unknown artifact kind {stored!r}")

