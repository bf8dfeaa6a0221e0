"""File formats for datasets, states, results, and run manifests.

Counted datasets are JSON objects ``{dim, elements: [{re, im, count}, ...]}``
with re/im as dim x dim row-major arrays. Quadrature records are CSV files
with header ``theta,x`` and one sample per row, converted to per-sample
projectors at load time (the truncation dimension comes from the caller).
Floats are written with 17 significant digits so a load/store round trip is
lossless.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .engine import ReconstructionResult
from .errors import DataFormatError
from .operators import validate_density
from .povm import QuadratureSample, quadrature_dataset
from .sweep import SweepRow


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _matrix_parts(m: np.ndarray) -> tuple[list[list[float]], list[list[float]]]:
    return m.real.tolist(), m.imag.tolist()


def _matrix_from_parts(re, im, dim: int, where: str) -> np.ndarray:
    try:
        real = np.asarray(re, dtype=np.float64)
        imag = np.asarray(im, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataFormatError(f"{where}: re/im are not numeric arrays ({exc})") from exc
    if real.shape != (dim, dim) or imag.shape != (dim, dim):
        raise DataFormatError(
            f"{where}: expected {dim}x{dim} re/im arrays, got {real.shape} and {imag.shape}"
        )
    return real + 1j * imag


# ---------------------------------------------------------------------------
# datasets


def parse_dataset(path, dim: int | None = None) -> Dataset:
    """Load a dataset file; ``.json`` holds counted elements, ``.csv`` quadrature samples.

    For CSV input ``dim`` selects the Fock-space truncation of the per-sample
    projectors and is required. Invariants (Hermiticity, positivity, counts)
    are validated on load.
    """
    path = Path(path)
    if path.suffix.lower() == ".json":
        return _parse_counts_json(path)
    if path.suffix.lower() == ".csv":
        if dim is None:
            raise DataFormatError("quadrature CSV input needs an explicit dimension")
        return quadrature_dataset(parse_quadrature_csv(path), dim)
    raise DataFormatError(f"unsupported dataset extension {path.suffix!r} (use .json or .csv)")


def _parse_counts_json(path: Path) -> Dataset:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise DataFormatError(f"{path}: top level must be an object")
    try:
        dim = int(payload["dim"])
        records = payload["elements"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: need integer 'dim' and list 'elements' ({exc})") from exc
    if dim < 1:
        raise DataFormatError(f"{path}: dim must be positive")
    if not isinstance(records, list) or not records:
        raise DataFormatError(f"{path}: 'elements' must be a non-empty list")
    elements = np.empty((len(records), dim, dim), dtype=np.complex128)
    counts = np.empty(len(records))
    for k, record in enumerate(records):
        where = f"{path}: element {k}"
        if not isinstance(record, dict):
            raise DataFormatError(f"{where}: must be an object")
        try:
            counts[k] = float(record["count"])
            re, im = record["re"], record["im"]
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"{where}: need 're', 'im', and numeric 'count' ({exc})") from exc
        elements[k] = _matrix_from_parts(re, im, dim, where)
    return Dataset(elements=elements, counts=counts)


def write_counts_dataset(path, dataset: Dataset) -> None:
    records = []
    for element, count in zip(dataset.elements, dataset.counts):
        re, im = _matrix_parts(element)
        records.append({"re": re, "im": im, "count": float(count)})
    payload = {"dim": dataset.dim, "elements": records}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def parse_quadrature_csv(path) -> list[QuadratureSample]:
    path = Path(path)
    samples = []
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["theta", "x"]:
            raise DataFormatError(f"{path}: expected header 'theta,x', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataFormatError(f"{path}:{lineno}: expected two columns, got {len(row)}")
            try:
                theta, x = float(row[0]), float(row[1])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: non-numeric value ({exc})") from exc
            if not (math.isfinite(theta) and math.isfinite(x)):
                raise DataFormatError(f"{path}:{lineno}: values must be finite")
            samples.append(QuadratureSample(theta, x))
    if not samples:
        raise DataFormatError(f"{path}: no samples")
    return samples


def write_quadrature_csv(path, samples) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["theta", "x"])
        for theta, x in samples:
            writer.writerow([_fmt(theta), _fmt(x)])


# ---------------------------------------------------------------------------
# states


def parse_state(path) -> np.ndarray:
    """Load a density matrix from JSON ``{dim, re, im}`` and validate it."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        dim = int(payload["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"{path}: need integer 'dim' ({exc})") from exc
    matrix = _matrix_from_parts(payload.get("re"), payload.get("im"), dim, str(path))
    return validate_density(matrix)


def write_state(path, state: np.ndarray) -> None:
    re, im = _matrix_parts(np.asarray(state, dtype=np.complex128))
    payload = {"dim": int(state.shape[0]), "re": re, "im": im}
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


# ---------------------------------------------------------------------------
# results and manifests


def _epsilon_token(eps: float):
    return float(eps) if math.isfinite(eps) else "inf"


def write_result_json(path, result: ReconstructionResult) -> None:
    re, im = _matrix_parts(result.estimate)
    payload = {
        "dim": int(result.estimate.shape[0]),
        "estimate": {"re": re, "im": im},
        "log_likelihood_trace": [float(v) for v in result.log_likelihood_trace],
        "epsilon_trace": [_epsilon_token(e) for e in result.epsilon_trace],
        "final_residual": float(result.final_residual),
        "iterations": int(result.iterations),
        "termination": result.termination.value,
        "diagnostics": result.diagnostics,
    }
    Path(path).write_text(json.dumps(payload, indent=1) + "\n")


def parse_result_estimate(path) -> np.ndarray:
    payload = json.loads(Path(path).read_text())
    dim = int(payload["dim"])
    return _matrix_from_parts(payload["estimate"]["re"], payload["estimate"]["im"], dim, str(path))


def write_sweep_csv(path, rows: list[SweepRow]) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["epsilon", "tolerance", "iterations", "converged"])
        for row in rows:
            writer.writerow(
                [
                    "inf" if math.isinf(row.epsilon) else _fmt(row.epsilon),
                    _fmt(row.tolerance),
                    row.iterations,
                    str(row.converged).lower(),
                ]
            )


@dataclass
class RunManifest:
    """Provenance record written next to every command's outputs."""

    command: str
    input_path: str | None
    output_paths: list[str]
    config: dict
    seed: int | None = None
    rng_algorithm: str | None = None
    wall_seconds_total: float = 0.0
    wall_seconds_per_iteration: float | None = None
    extra: dict = field(default_factory=dict)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=1, default=str) + "\n")
