"""Measurement records: POVM elements paired with observed counts.

Counts are stored as floats so binned or weighted records (and per-sample
homodyne data with count 1 each) all fit the same container.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .operators import HERMITICITY_ATOL, PSD_ATOL, eigendecompose, hermitize

G_INVERSE_ATOL = 1e-8


@dataclass(frozen=True)
class Dataset:
    """Stack of measurement elements with the number of occurrences of each outcome.

    Attributes
    ----------
    elements : (n_outcomes, dim, dim) complex128 array; each slice is a PSD
        Hermitian measurement element.
    counts : (n_outcomes,) float array of non-negative occurrence counts.
    vectors : optional (n_outcomes, dim) array when every element is the rank-1
        outer product of the corresponding row; lets the iteration work on the
        vectors directly instead of streaming the full element stack.
    """

    elements: np.ndarray
    counts: np.ndarray
    vectors: np.ndarray | None = None

    def __post_init__(self):
        elements = np.asarray(self.elements, dtype=np.complex128)
        counts = np.asarray(self.counts, dtype=np.float64)
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise ValidationError(f"elements must be a (k, dim, dim) stack, got {elements.shape}")
        if counts.shape != (elements.shape[0],):
            raise ValidationError(
                f"counts shape {counts.shape} does not match {elements.shape[0]} elements"
            )
        if elements.shape[0] == 0:
            raise ValidationError("dataset has no measurement records")
        if np.any(counts < 0) or not np.all(np.isfinite(counts)):
            raise ValidationError("counts must be finite and non-negative")
        if not np.any(counts > 0):
            raise ValidationError("dataset needs at least one positive count")
        skew = np.max(np.abs(elements - elements.conj().transpose(0, 2, 1)))
        if skew > HERMITICITY_ATOL:
            raise ValidationError(f"a measurement element is non-Hermitian by {skew:.3e}")
        lowest = np.min(np.linalg.eigvalsh(elements))
        if lowest < -PSD_ATOL:
            raise ValidationError(f"a measurement element has eigenvalue {lowest:.3e} < -{PSD_ATOL:.0e}")
        vectors = self.vectors
        if vectors is not None:
            vectors = np.asarray(vectors, dtype=np.complex128)
            if vectors.shape != elements.shape[:2]:
                raise ValidationError(
                    f"vectors shape {vectors.shape} does not match elements {elements.shape[:2]}"
                )
            for k in range(min(vectors.shape[0], 8)):  # spot check the rank-1 promise
                outer = np.outer(vectors[k], vectors[k].conj())
                if np.max(np.abs(outer - elements[k])) > 1e-10:
                    raise ValidationError(f"element {k} is not the outer product of vectors[{k}]")
        object.__setattr__(self, "elements", elements)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "vectors", vectors)
        # cached conjugate so the iteration hot path does not re-allocate it
        object.__setattr__(self, "vectors_conj", vectors.conj() if vectors is not None else None)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]

    @property
    def total(self) -> float:
        """Total number of measurements (sum of counts)."""
        return float(self.counts.sum())

    def element_sum(self) -> np.ndarray:
        """Sum of all measurement elements (identity for a complete POVM)."""
        return self.elements.sum(axis=0)


@dataclass(frozen=True)
class GOperator:
    """Sum of the dataset's measurement elements together with its inverse.

    Used to debias reconstructions when the POVM does not sum to the identity.
    ``condition`` is the ratio of extreme eigenvalues of the sum.
    """

    matrix: np.ndarray
    inverse: np.ndarray
    condition: float = field(default=1.0)

    @classmethod
    def from_dataset(cls, dataset: Dataset, condition_limit: float = 1e12) -> "GOperator":
        matrix = hermitize(dataset.element_sum())
        values, vectors = eigendecompose(matrix)
        lo, hi = values[-1], values[0]
        if lo <= 0.0 or hi / lo > condition_limit:
            raise ValidationError(
                f"element sum is singular or ill-conditioned (eigenvalues in [{lo:.3e}, {hi:.3e}])"
            )
        inverse = (vectors / values) @ vectors.conj().T
        return cls(matrix=matrix, inverse=hermitize(inverse), condition=float(hi / lo))

    def __post_init__(self):
        residual = np.max(np.abs(self.matrix @ self.inverse - np.eye(self.matrix.shape[0])))
        if residual > G_INVERSE_ATOL:
            raise ValidationError(f"inverse check failed: |G G^-1 - 1| = {residual:.3e}")
