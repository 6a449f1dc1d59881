"""Dataset bundles on disk, results archives, and benchmark generators.

Bundle layout (all UTF-8, decimal text for scores):

* ``manifest.json``  — {name, n, m, models, metric, precomputed}
* ``oracle.csv``     — n rows x m columns, header = model names
* ``similarities.jsonl`` — one record per query: {"query": i, "matrix": [[m x m]]}
* ``responses.jsonl``    — optional: {"query": i, "reference": str,
  "outputs": [m strings], "text": optional prompt text}

Precomputed bundles ship oracle.csv + similarities.jsonl; raw bundles ship
responses.jsonl and are scored at load with the manifest's metric. Loaded
tensors are validated (finite, in range, unit diagonal for precomputed) and
symmetrized. Results archives are written with fixed formatting and no
timestamps so identical runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import os
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import OracleScoreMatrix, SimilarityTensor
from .metrics import MetricKind, build_oracle_matrix, build_similarity_tensor

MANIFEST = "manifest.json"
ORACLE_CSV = "oracle.csv"
SIMILARITIES_JSONL = "similarities.jsonl"
RESPONSES_JSONL = "responses.jsonl"
DIAGONAL_TOL = 1e-9


class BundleLoadError(Exception):
    """Structured load failure naming the offending file and record."""

    def __init__(self, file: str, message: str, record=None):
        self.file = file
        self.record = record
        self.message = message
        where = f"{file}" if record is None else f"{file} (record {record})"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class DatasetBundle:
    name: str
    models: tuple[str, ...]
    metric: str
    precomputed: bool
    tensor: SimilarityTensor
    oracle: OracleScoreMatrix
    responses: tuple[dict, ...] | None = None
    report: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.tensor.n

    @property
    def m(self) -> int:
        return self.tensor.m

    def manifest(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "m": self.m,
            "models": list(self.models),
            "metric": self.metric,
            "precomputed": self.precomputed,
        }


def _read_manifest(root: Path) -> dict:
    path = root / MANIFEST
    if not path.is_file():
        raise BundleLoadError(MANIFEST, "missing file")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleLoadError(MANIFEST, f"invalid JSON: {exc}")
    for key in ("name", "n", "m", "models", "metric", "precomputed"):
        if key not in manifest:
            raise BundleLoadError(MANIFEST, f"missing field {key!r}")
    n, m = manifest["n"], manifest["m"]
    if not (isinstance(n, int) and isinstance(m, int) and n >= 1 and m >= 1):
        raise BundleLoadError(MANIFEST, f"bad dimensions n={n!r} m={m!r}")
    if len(manifest["models"]) != m:
        raise BundleLoadError(
            MANIFEST, f"{len(manifest['models'])} model names for m={m}")
    return manifest


def _load_oracle_csv(root: Path, manifest: dict) -> OracleScoreMatrix:
    path = root / ORACLE_CSV
    if not path.is_file():
        raise BundleLoadError(ORACLE_CSV, "missing file")
    n, m = manifest["n"], manifest["m"]
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(manifest["models"]):
            raise BundleLoadError(ORACLE_CSV, "header does not match manifest models")
        rows = list(reader)
    if len(rows) != n:
        raise BundleLoadError(ORACLE_CSV, f"{len(rows)} rows, expected {n}")
    entries = np.zeros((n, m))
    for i, row in enumerate(rows):
        if len(row) != m:
            raise BundleLoadError(ORACLE_CSV, f"{len(row)} columns, expected {m}", record=i)
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise BundleLoadError(ORACLE_CSV, f"bad score {cell!r}", record=i)
            if not np.isfinite(value):
                raise BundleLoadError(ORACLE_CSV, f"non-finite score {cell!r}", record=i)
            if not -1.0 <= value <= 1.0:
                raise BundleLoadError(ORACLE_CSV, f"score {value} outside [-1, 1]", record=i)
            entries[i, j] = value
    return OracleScoreMatrix(entries)


def _load_similarities(root: Path, manifest: dict) -> SimilarityTensor:
    path = root / SIMILARITIES_JSONL
    if not path.is_file():
        raise BundleLoadError(SIMILARITIES_JSONL, "missing file")
    n, m = manifest["n"], manifest["m"]
    entries = np.full((n, m, m), np.nan)
    seen = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BundleLoadError(SIMILARITIES_JSONL, f"invalid JSON: {exc}", record=lineno)
            query = record.get("query")
            if not isinstance(query, int) or not 0 <= query < n:
                raise BundleLoadError(SIMILARITIES_JSONL, f"bad query id {query!r}", record=lineno)
            if query in seen:
                raise BundleLoadError(SIMILARITIES_JSONL, f"duplicate query {query}", record=lineno)
            seen.add(query)
            matrix = np.asarray(record.get("matrix"), dtype=np.float64)
            if matrix.shape != (m, m):
                raise BundleLoadError(
                    SIMILARITIES_JSONL, f"matrix shape {matrix.shape}, expected ({m}, {m})",
                    record=lineno)
            if not np.isfinite(matrix).all():
                raise BundleLoadError(SIMILARITIES_JSONL, "non-finite similarity", record=lineno)
            if matrix.min() < -1.0 or matrix.max() > 1.0:
                raise BundleLoadError(SIMILARITIES_JSONL, "similarity outside [-1, 1]", record=lineno)
            if np.abs(np.diagonal(matrix) - 1.0).max() > DIAGONAL_TOL:
                raise BundleLoadError(
                    SIMILARITIES_JSONL, "diagonal self-similarity is not 1.0", record=lineno)
            entries[query] = matrix
    missing = sorted(set(range(n)) - seen)
    if missing:
        raise BundleLoadError(SIMILARITIES_JSONL, f"missing queries {missing[:5]}")
    return SimilarityTensor(entries).symmetrized()


def _load_responses(root: Path, manifest: dict, required: bool) -> tuple[dict, ...] | None:
    path = root / RESPONSES_JSONL
    if not path.is_file():
        if required:
            raise BundleLoadError(RESPONSES_JSONL, "missing file (raw bundle)")
        return None
    n, m = manifest["n"], manifest["m"]
    records: dict[int, dict] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise BundleLoadError(RESPONSES_JSONL, f"invalid JSON: {exc}", record=lineno)
            query = record.get("query")
            if not isinstance(query, int) or not 0 <= query < n:
                raise BundleLoadError(RESPONSES_JSONL, f"bad query id {query!r}", record=lineno)
            if query in records:
                raise BundleLoadError(RESPONSES_JSONL, f"duplicate query {query}", record=lineno)
            if not isinstance(record.get("reference"), str):
                raise BundleLoadError(RESPONSES_JSONL, "missing reference text", record=lineno)
            outputs = record.get("outputs")
            if not isinstance(outputs, list) or len(outputs) != m \
                    or not all(isinstance(o, str) for o in outputs):
                raise BundleLoadError(RESPONSES_JSONL, f"outputs must be {m} strings", record=lineno)
            records[query] = record
    missing = sorted(set(range(n)) - set(records))
    if missing:
        raise BundleLoadError(RESPONSES_JSONL, f"missing queries {missing[:5]}")
    return tuple(records[i] for i in range(n))


def load_bundle(path) -> DatasetBundle:
    """Load and validate a dataset bundle directory."""
    root = Path(path)
    if not root.is_dir():
        raise BundleLoadError(str(path), "bundle directory does not exist")
    manifest = _read_manifest(root)
    report = [f"manifest: n={manifest['n']} m={manifest['m']} metric={manifest['metric']}"]

    if manifest["precomputed"]:
        oracle = _load_oracle_csv(root, manifest)
        tensor = _load_similarities(root, manifest)
        responses = _load_responses(root, manifest, required=False)
        report.append("precomputed: oracle and similarity files validated")
    else:
        try:
            kind = MetricKind(manifest["metric"])
        except ValueError:
            raise BundleLoadError(MANIFEST, f"unknown metric {manifest['metric']!r}")
        if kind is MetricKind.PRECOMPUTED:
            raise BundleLoadError(MANIFEST, "raw bundle cannot use the precomputed metric")
        responses = _load_responses(root, manifest, required=True)
        outputs = [list(r["outputs"]) for r in responses]
        references = [r["reference"] for r in responses]
        oracle = build_oracle_matrix(outputs, references, kind)
        tensor = build_similarity_tensor(outputs, kind)
        report.append(f"raw: scored {manifest['n']}x{manifest['m']} responses with {kind.value}")

    if oracle.n != manifest["n"] or oracle.m != manifest["m"]:
        raise BundleLoadError(ORACLE_CSV, "oracle shape does not match manifest")
    if tensor.n != manifest["n"] or tensor.m != manifest["m"]:
        raise BundleLoadError(SIMILARITIES_JSONL, "tensor shape does not match manifest")
    report.append("shape and range checks passed")

    return DatasetBundle(
        name=manifest["name"],
        models=tuple(manifest["models"]),
        metric=manifest["metric"],
        precomputed=bool(manifest["precomputed"]),
        tensor=tensor,
        oracle=oracle,
        responses=responses,
        report=tuple(report),
    )


def write_bundle(bundle: DatasetBundle, path, force: bool = False) -> Path:
    """Write a bundle directory; scores as full-precision decimal text."""
    root = Path(path)
    if root.exists() and not force:
        raise FileExistsError(f"{root} already exists")
    root.mkdir(parents=True, exist_ok=True)
    (root / MANIFEST).write_text(
        json.dumps(bundle.manifest(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(bundle.models)
    for row in bundle.oracle.entries:
        writer.writerow([repr(float(v)) for v in row])
    (root / ORACLE_CSV).write_text(buf.getvalue(), encoding="utf-8")

    with (root / SIMILARITIES_JSONL).open("w", encoding="utf-8") as fh:
        for i in range(bundle.n):
            matrix = [[float(v) for v in row] for row in bundle.tensor.entries[i]]
            fh.write(json.dumps({"query": i, "matrix": matrix}) + "\n")

    if bundle.responses is not None:
        with (root / RESPONSES_JSONL).open("w", encoding="utf-8") as fh:
            for record in bundle.responses:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
    return root


def format_decimal(value) -> str:
    if value is None:
        return ""
    return f"{float(value):.6f}"


def curve_csv(columns: dict[str, Sequence]) -> str:
    """CSV text with a fixed column order and 6-decimal scores."""
    names = list(columns)
    length = len(next(iter(columns.values())))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for i in range(length):
        row = []
        for name in names:
            value = columns[name][i]
            if name == "budget" or isinstance(value, (int, np.integer)):
                row.append(str(int(value)))
            else:
                row.append(format_decimal(value))
        writer.writerow(row)
    return buf.getvalue()


def summary_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_archive(files: dict[str, str], out_dir, force: bool = False) -> Path:
    """Write an archive atomically: stage in a sibling temp dir, then rename."""
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise FileExistsError(f"{out} exists and is not empty")
    tmp = out.parent / f".{out.name}.partial-{os.getpid()}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir(parents=True)
    try:
        for name in sorted(files):
            target = tmp / name
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(files[name], encoding="utf-8")
        if out.exists():
            shutil.rmtree(out)
        os.rename(tmp, out)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp)
    return out


def make_planted_bundle(n: int = 60, m: int = 5, seed: int = 0,
                        discriminating_fraction: float = 0.3,
                        noise: float = 0.02) -> DatasetBundle:
    """Synthetic bundle with a planted best model.

    A fixed fraction of queries is discriminating: models respond according
    to their latent quality, so oracle rows track quality (plus noise) and
    pairwise similarities drop with quality gaps. The rest are uninformative:
    every model agrees and scores the same there. The best model is never
    index 0, so uninformative annotations cannot identify it by tie-break.
    """
    rng = np.random.default_rng([seed, 2024])
    quality = rng.permutation(np.linspace(0.35, 0.9, m))
    if int(np.argmax(quality)) == 0:
        swap = 1 + int(rng.integers(0, m - 1))
        quality[[0, swap]] = quality[[swap, 0]]

    disc_count = max(1, int(round(discriminating_fraction * n)))
    disc = np.zeros(n, dtype=bool)
    disc[rng.choice(n, size=disc_count, replace=False)] = True

    oracle = np.zeros((n, m))
    tensor = np.ones((n, m, m))
    gap = np.abs(quality[:, None] - quality[None, :])
    for i in range(n):
        if disc[i]:
            row = quality + noise * rng.standard_normal(m)
            oracle[i] = np.clip(row, 0.0, 1.0)
            tensor[i] = 1.0 - gap
        else:
            oracle[i] = np.clip(0.5 + noise * rng.standard_normal(), 0.0, 1.0)

    models = tuple(f"model-{j:02d}" for j in range(m))
    return DatasetBundle(
        name=f"planted-{seed}",
        models=models,
        metric="precomputed",
        precomputed=True,
        tensor=SimilarityTensor(tensor),
        oracle=OracleScoreMatrix(oracle),
        report=("synthetic planted bundle",),
    )


def from_instance_records(records: Iterable[Mapping]) -> tuple[OracleScoreMatrix, tuple[str, ...], tuple[str, ...]]:
    """Convert per-instance score dumps to an oracle matrix.

    Mapping: sorted unique instance ids become query indices 0..n-1, sorted
    unique model names become columns 0..m-1. Each record needs "instance",
    "model" and "score"; every (instance, model) pair must appear exactly
    once. Returns (oracle, model names, instance ids).
    """
    rows = list(records)
    instances = sorted({str(r["instance"]) for r in rows})
    models = sorted({str(r["model"]) for r in rows})
    index_q = {q: i for i, q in enumerate(instances)}
    index_m = {f: j for j, f in enumerate(models)}
    entries = np.full((len(instances), len(models)), np.nan)
    for r in rows:
        i, j = index_q[str(r["instance"])], index_m[str(r["model"])]
        if not np.isnan(entries[i, j]):
            raise ValueError(f"duplicate score for ({r['instance']}, {r['model']})")
        entries[i, j] = float(r["score"])
    if np.isnan(entries).any():
        i, j = map(int, np.argwhere(np.isnan(entries))[0])
        raise ValueError(f"missing score for ({instances[i]}, {models[j]})")
    return OracleScoreMatrix(entries), tuple(models), tuple(instances)
