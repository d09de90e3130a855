"""Value types shared by every module: cochain bases, operators, determinants."""

from dataclasses import dataclass, field

import numpy as np


def fiber_indices(positions, rank):
    """Flat indices of the given simplex positions in a simplex-major, fiber-minor basis."""
    positions = np.asarray(positions, dtype=int).reshape(-1)
    return (positions[:, None] * rank + np.arange(rank)[None, :]).reshape(-1)


@dataclass(frozen=True)
class Basis:
    degree: int
    simplices: tuple
    rank: int = 1

    @property
    def size(self):
        return len(self.simplices) * self.rank

    def labels(self):
        return [(simplex, k) for simplex in self.simplices for k in range(self.rank)]

    def restrict(self, positions):
        return Basis(self.degree, tuple(self.simplices[p] for p in positions), self.rank)


@dataclass(frozen=True)
class LinearOperator:
    matrix: np.ndarray
    domain: Basis
    codomain: Basis
    tag: str = ""

    def __post_init__(self):
        if self.matrix.shape != (self.codomain.size, self.domain.size):
            raise ValueError(
                f"Matrix shape {self.matrix.shape} does not match bases "
                f"({self.codomain.size}, {self.domain.size})"
            )

    @property
    def shape(self):
        return self.matrix.shape

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            return LinearOperator(self.matrix @ other.matrix, other.domain, self.codomain, self.tag)
        return self.matrix @ other

    def adjoint(self):
        return LinearOperator(self.matrix.conj().T, self.codomain, self.domain, self.tag)

    def is_hermitian(self, rtol=1e-12):
        scale = max(1.0, float(np.abs(self.matrix).max(initial=0.0)))
        return bool(np.abs(self.matrix - self.matrix.conj().T).max(initial=0.0) <= rtol * scale)


@dataclass(frozen=True)
class Determinant:
    """Log-space determinant (or pseudodeterminant) with its kernel dimension."""

    log: float
    kernel_dim: int = 0
    eigenvalues: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def value(self):
        return float(np.exp(self.log))
