"""Combinatorial Laplacians, Dirichlet restriction, spectra, determinants and
the discrete Green formula."""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, eigh, LinAlgError

from .bundle import trivial_connection
from .conf import engine_setting
from .exceptions import ComplexError, IndefiniteOperatorError, SingularFormError
from .metric import gram
from .operators import Basis, Determinant, LinearOperator, fiber_indices

logger = logging.getLogger(__name__)


def _connection(K, A):
    return trivial_connection(K) if A is None else A


def log_det_positive(matrix, what="matrix"):
    """log det of a Hermitian positive-definite matrix via Cholesky."""
    if matrix.shape[0] == 0:
        return 0.0
    try:
        factor = cholesky(matrix, lower=True)
    except LinAlgError as exc:
        raise SingularFormError(f"{what} is not positive definite") from exc
    return float(2.0 * np.sum(np.log(np.abs(np.diag(factor)))))


@dataclass(frozen=True, eq=False)
class LaplacianBundle:
    """Laplacian in degree q: ``local`` is Delta^loc = Q Delta, ``gram`` is Q."""

    complex: object
    weights: object
    connection: object
    degree: int
    local: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    basis: Basis = None
    tag: str = "laplacian"

    @cached_property
    def matrix(self):
        return cho_solve(cho_factor(self.gram), self.local)

    def operator(self):
        return LinearOperator(self.matrix, self.basis, self.basis, tag=self.tag)

    def local_operator(self):
        return LinearOperator(self.local, self.basis, self.basis, tag=f"{self.tag}_local")

    def spectrum(self):
        """Eigenvalues of Delta, i.e. of the pencil (Delta^loc, Q)."""
        if self.local.shape[0] == 0:
            return np.zeros(0)
        return eigh(self.local, self.gram, eigvals_only=True)

    def self_adjointness_defect(self):
        """||Q Delta - Delta^† Q|| relative to ||Q Delta||."""
        QD = self.gram @ self.matrix
        scale = max(np.abs(QD).max(initial=0.0), 1e-300)
        return float(np.abs(QD - QD.conj().T).max(initial=0.0) / scale)


def local_laplacian(K, W, A, q):
    """D_q^† Q_{q+1} D_q + Q_q D_{q-1} Q_{q-1}^{-1} D_{q-1}^† Q_q."""
    Q = gram(K, W, A, q).matrix
    local = np.zeros_like(Q)
    if q < K.dim:
        D = A.covariant_d(q).matrix
        local = local + D.conj().T @ gram(K, W, A, q + 1).matrix @ D
    if q >= 1:
        D = A.covariant_d(q - 1).matrix
        lower = gram(K, W, A, q - 1).matrix
        local = local + Q @ D @ cho_solve(cho_factor(lower), D.conj().T @ Q)
    return local, Q


def laplacian(K, W, A=None, q=0):
    """Delta = d d^∨ + d^∨ d in degree q."""
    if q < 0 or q > K.dim:
        raise ComplexError(f"Laplacian degree {q} outside 0..{K.dim}")
    A = _connection(K, A)
    local, Q = local_laplacian(K, W, A, q)
    logger.debug("Laplacian of degree %d, size %d", q, local.shape[0])
    return LaplacianBundle(K, W, A, q, local, Q, A.bundle.basis(q), tag=f"laplacian_{q}")


class DirichletProblemSpace:
    """Split of 0-cochains into interior (K minus L) and boundary (L) parts.

    ``p`` restricts to L, ``j`` extends boundary cochains by zero, ``inclusion``
    embeds relative cochains (those vanishing on L).
    """

    def __init__(self, K, L, rank=1):
        self.complex = K
        self.boundary_subcomplex = L
        self.rank = rank
        boundary = set(L.positions(0)) if L is not None else set()
        self.boundary_vertices = tuple(sorted(boundary))
        self.interior_vertices = tuple(v for v in range(K.count(0)) if v not in boundary)
        self.boundary = fiber_indices(self.boundary_vertices, rank)
        self.interior = fiber_indices(self.interior_vertices, rank)
        self.size = K.count(0) * rank

    @property
    def p(self):
        return np.eye(self.size)[self.boundary]

    @property
    def j(self):
        return np.eye(self.size)[:, self.boundary]

    @property
    def inclusion(self):
        return np.eye(self.size)[:, self.interior]

    def interior_block(self, matrix):
        return matrix[np.ix_(self.interior, self.interior)]

    def boundary_block(self, matrix):
        return matrix[np.ix_(self.boundary, self.boundary)]

    def boundary_inner(self, Q, inner="restriction"):
        """Gram of <.,.>_L: weights restricted from K, or pulled back through j."""
        if inner == "restriction":
            return self.boundary_block(Q)
        if inner == "splitting":
            j = self.j
            return j.T @ Q @ j
        raise ValueError(f"Unknown boundary inner product {inner!r}")


def dirichlet_laplacian(K, L, W, A=None):
    """Delta_{K,L}: Delta_K restricted to cochains vanishing on L (degree 0)."""
    A = _connection(K, A)
    space = DirichletProblemSpace(K, L, A.rank)
    if space.interior.size == 0:
        raise ComplexError("Dirichlet problem has an empty interior")
    local, Q = local_laplacian(K, W, A, 0)
    basis = A.bundle.basis(0, space.interior_vertices)
    tag = "dirichlet" if space.boundary.size else "laplacian_0"
    return LaplacianBundle(
        K, W, A, 0, space.interior_block(local), space.interior_block(Q), basis, tag=tag
    )


def _pencil(op, metric=None):
    if isinstance(op, LaplacianBundle):
        return op.local, op.gram
    matrix = op.matrix if isinstance(op, LinearOperator) else np.asarray(op)
    return matrix, metric


def eigenvalues(op, metric=None):
    matrix, metric = _pencil(op, metric)
    if matrix.shape[0] == 0:
        return np.zeros(0)
    if metric is None:
        return np.linalg.eigvalsh(matrix)
    return eigh(matrix, metric, eigvals_only=True)


def det_prime(op, rtol=None, metric=None, scale=0.0):
    """Product of the eigenvalues above the kernel cutoff.

    cutoff = rtol * max(largest eigenvalue, scale) * dimension; pass ``scale``
    when the operator may vanish up to rounding. The operator is
    self-adjoint for ``metric`` (Euclidean when omitted; the Gram of a
    LaplacianBundle otherwise).
    """
    rtol = engine_setting("KERNEL_RTOL") if rtol is None else rtol
    values = eigenvalues(op, metric)
    if values.size == 0:
        return Determinant(0.0, 0, values)
    cutoff = rtol * max(float(values.max()), scale, 0.0) * values.size
    if values.min() < -cutoff:
        raise IndefiniteOperatorError(
            f"Operator has a negative eigenvalue {values.min():.3e} below the cutoff {cutoff:.3e}",
            float(values.min()),
        )
    kept = values[values > cutoff]
    kernel = int(values.size - kept.size)
    logger.debug("det' with cutoff %.3e, kernel dimension %d", cutoff, kernel)
    return Determinant(float(np.sum(np.log(kept))), kernel, values)


def det_massive(op, mass_squared, Q=None):
    """det(Delta^loc + m^2 Q) on the space the operator lives on."""
    if isinstance(op, LaplacianBundle):
        local, Q = op.local, op.gram
    else:
        local = op.matrix if isinstance(op, LinearOperator) else np.asarray(op)
        Q = np.eye(local.shape[0]) if Q is None else Q
    return Determinant(log_det_positive(local + mass_squared * Q, "massive operator"), 0)


def green_residual(K, L, W, A, phi, psi, inner="restriction"):
    """Defect of <d phi, psi>_K = <phi, d^∨_{K,L} psi>_{K,L} + <p phi, psi_n>_L.

    d^∨_{K,L} is the adjoint of d restricted to relative cochains and psi_n is
    the normal component of psi on L. Normalized by max(1, |<d phi, psi>_K|).
    """
    A = _connection(K, A)
    space = DirichletProblemSpace(K, L, A.rank)
    phi = np.asarray(phi).reshape(-1)
    psi = np.asarray(psi).reshape(-1)
    D = A.covariant_d(0).matrix
    Q0 = gram(K, W, A, 0).matrix
    Q1 = gram(K, W, A, 1).matrix

    lhs = np.vdot(D @ phi, Q1 @ psi)

    total = 0.0
    Q_int = space.interior_block(Q0)
    if space.interior.size:
        codiff = cho_solve(cho_factor(Q_int), D[:, space.interior].conj().T @ Q1 @ psi)
        total += np.vdot(phi[space.interior], Q_int @ codiff)
    if space.boundary.size:
        Q_L = space.boundary_inner(Q0, inner)
        normal = cho_solve(cho_factor(Q_L), D[:, space.boundary].conj().T @ Q1 @ psi)
        total += np.vdot(phi[space.boundary], Q_L @ normal)
    return float(abs(lhs - total) / max(1.0, abs(lhs)))
