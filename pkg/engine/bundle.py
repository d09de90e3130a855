"""Hermitian vector bundles over a complex, connections given by parallel
transports on the edges of D(K), curvature and the covariant derivative.

Transports are stored per degree as arrays of shape ``(n_{q+1}, q + 2, r, r)``:
``transports[q][t, k]`` is A(tau, sigma), the map from the fiber over the k-th
face sigma of tau (face-deletion order) to the fiber over tau. Transports in the
opposite direction are inverses.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.stats import ortho_group, unitary_group

from .conf import engine_setting
from .exceptions import ComplexError, NotPositiveDefiniteError, TransportError
from .metric import gram
from .operators import Basis, LinearOperator
from .simplicial import DoubleComplex

logger = logging.getLogger(__name__)

FIELDS = ("real", "complex")


def _dtype(field):
    return np.complex128 if field == "complex" else np.float64


@dataclass(frozen=True, eq=False)
class Bundle:
    complex: object
    rank: int = 1
    field: str = "real"
    fiber_metrics: tuple = None

    def __post_init__(self):
        if self.field not in FIELDS:
            raise TransportError(f"Unknown scalar field {self.field!r}")
        if self.rank < 1:
            raise TransportError("Bundle rank must be at least 1")
        K = self.complex
        if self.fiber_metrics is None:
            metrics = tuple(
                np.broadcast_to(np.eye(self.rank, dtype=self.dtype), (K.count(q), self.rank, self.rank)).copy()
                for q in range(K.dim + 1)
            )
            object.__setattr__(self, "fiber_metrics", metrics)
            return
        metrics = tuple(np.asarray(h, dtype=self.dtype) for h in self.fiber_metrics)
        for q, h in enumerate(metrics):
            if h.shape != (K.count(q), self.rank, self.rank):
                raise TransportError(f"Fiber metrics of degree {q} have shape {h.shape}")
            if not np.allclose(h, np.conj(np.swapaxes(h, -1, -2)), rtol=0, atol=1e-12 * max(1.0, np.abs(h).max())):
                raise TransportError(f"Fiber metrics of degree {q} are not Hermitian")
            smallest = np.linalg.eigvalsh(h).min(initial=np.inf)
            if smallest <= 0:
                raise NotPositiveDefiniteError(
                    f"Fiber metric of degree {q} is not positive definite", smallest
                )
        object.__setattr__(self, "fiber_metrics", metrics)

    @property
    def dtype(self):
        return _dtype(self.field)

    def metric(self, q, i):
        return self.fiber_metrics[q][i]

    def basis(self, q, positions=None):
        if positions is None:
            positions = range(self.complex.count(q))
        return Basis(q, tuple(positions), self.rank)


@dataclass(frozen=True)
class Cochain:
    degree: int
    values: np.ndarray

    @property
    def flat(self):
        return self.values.reshape(-1)


class Connection:
    """Parallel transports on the edges of D(K).

    With ``hermitian=True`` each transport is checked to be an isometry of the
    fiber metrics, ``A^† h_tau A = h_sigma``.
    """

    def __init__(self, bundle, transports, hermitian=True, tolerance=None):
        self.bundle = bundle
        K = bundle.complex
        r = bundle.rank
        self.hermitian = hermitian
        self.tolerance = engine_setting("FLATNESS_TOL") if tolerance is None else tolerance
        stored = []
        for q in range(K.dim):
            array = np.asarray(transports[q], dtype=bundle.dtype)
            expected = (K.count(q + 1), q + 2, r, r)
            if array.shape != expected:
                raise TransportError(f"Transports of degree {q} have shape {array.shape}, expected {expected}")
            if array.size and np.abs(np.linalg.det(array)).min() < 1e-14:
                raise TransportError(f"Singular transport in degree {q}")
            stored.append(array)
        self.transports = tuple(stored)
        if hermitian:
            self._check_isometries()

    def __repr__(self):
        return f"Connection(rank={self.rank}, field={self.field!r}, hermitian={self.hermitian})"

    @property
    def complex(self):
        return self.bundle.complex

    @property
    def rank(self):
        return self.bundle.rank

    @property
    def field(self):
        return self.bundle.field

    @property
    def dtype(self):
        return self.bundle.dtype

    @cached_property
    def double(self):
        return DoubleComplex(self.complex)

    def _check_isometries(self):
        K = self.complex
        for q, array in enumerate(self.transports):
            for t in range(K.count(q + 1)):
                h_tau = self.bundle.metric(q + 1, t)
                for k, (j, _) in enumerate(K.faces(q + 1, t)):
                    A = array[t, k]
                    h_sigma = self.bundle.metric(q, j)
                    defect = np.abs(A.conj().T @ h_tau @ A - h_sigma).max()
                    if defect > self.tolerance * max(1.0, np.abs(h_sigma).max()):
                        raise TransportError(
                            f"Transport {K.simplex(q, j)} -> {K.simplex(q + 1, t)} is not unitary "
                            f"(defect {defect:.3e})"
                        )

    def _slot(self, upper, lower):
        (p, t), (q, j) = upper, lower
        for k, (face, _) in enumerate(self.complex.faces(p, t)):
            if face == j:
                return k
        raise TransportError(f"{lower} is not a face of {upper}")

    def transport(self, target, source):
        """A(target, source) for adjacent simplices (one is a face of the other)."""
        if target[0] == source[0] + 1:
            return self.transports[source[0]][target[1], self._slot(target, source)]
        if source[0] == target[0] + 1:
            return np.linalg.inv(self.transports[target[0]][source[1], self._slot(source, target)])
        raise TransportError(f"{source} and {target} are not adjacent in D(K)")

    def path_transport(self, path):
        """Composite transport along a D(K) edge path ``path[0] -> path[-1]``."""
        result = np.eye(self.rank, dtype=self.dtype)
        for source, target in zip(path, path[1:]):
            result = self.transport(target, source) @ result
        return result

    def holonomy(self, loop):
        return self.path_transport(list(loop) + [loop[0]])

    def pair_transport(self, sigma, tau):
        """Transport E_tau -> E_sigma between same-degree simplices.

        Goes through the first common cofacet, else the first common face,
        else along a shortest D(K) path. For flat connections the choice does
        not matter.
        """
        if sigma == tau:
            return np.eye(self.rank, dtype=self.dtype)
        K = self.complex
        q = sigma[0]
        if q < K.dim:
            above = {t for t, _ in K.cofaces(*sigma)} & {t for t, _ in K.cofaces(*tau)}
            if above:
                eta = (q + 1, min(above))
                return self.transport(sigma, eta) @ self.transport(eta, tau)
        if q > 0:
            below = {j for j, _ in K.faces(*sigma)} & {j for j, _ in K.faces(*tau)}
            if below:
                rho = (q - 1, min(below))
                return self.transport(sigma, rho) @ self.transport(rho, tau)
        return self.path_transport(self.double.shortest_path(tau, sigma))

    def curvature(self, leaf):
        return (
            self.transport(leaf.eta, leaf.tau_plus) @ self.transport(leaf.tau_plus, leaf.sigma)
            - self.transport(leaf.eta, leaf.tau_minus) @ self.transport(leaf.tau_minus, leaf.sigma)
        )

    def max_curvature(self):
        return max((np.abs(self.curvature(leaf)).max() for leaf in self.double.leaves), default=0.0)

    def is_flat(self, tolerance=None):
        tolerance = self.tolerance if tolerance is None else tolerance
        return bool(self.max_curvature() <= tolerance)

    def covariant_d(self, q):
        """Matrix of d_A from q-cochains to (q+1)-cochains."""
        K = self.complex
        if q < 0 or q >= K.dim:
            raise ComplexError(f"Covariant derivative of degree {q} needs 0 <= q < {K.dim}")
        r = self.rank
        matrix = np.zeros((K.count(q + 1) * r, K.count(q) * r), dtype=self.dtype)
        for t in range(K.count(q + 1)):
            for k, (j, sign) in enumerate(K.faces(q + 1, t)):
                matrix[t * r:(t + 1) * r, j * r:(j + 1) * r] += sign * self.transports[q][t, k]
        return LinearOperator(matrix, self.bundle.basis(q), self.bundle.basis(q + 1), tag=f"d_{q}")

    def replaced(self, overrides, hermitian=None):
        """Copy with some transports replaced; ``overrides`` maps ``(tau, sigma)`` to a matrix."""
        transports = [array.copy() for array in self.transports]
        for (tau, sigma), matrix in overrides.items():
            transports[sigma[0]][tau[1], self._slot(tau, sigma)] = matrix
        if hermitian is None:
            try:
                return Connection(self.bundle, transports, hermitian=True, tolerance=self.tolerance)
            except TransportError:
                return Connection(self.bundle, transports, hermitian=False, tolerance=self.tolerance)
        return Connection(self.bundle, transports, hermitian=hermitian, tolerance=self.tolerance)

    def perturbed(self, tau, sigma, delta):
        """Adds ``delta`` (a scalar times the identity, or a matrix) to A(tau, sigma)."""
        delta = np.asarray(delta, dtype=self.dtype)
        if delta.ndim == 0:
            delta = delta * np.eye(self.rank, dtype=self.dtype)
        current = self.transport(tau, sigma)
        return self.replaced({(tau, sigma): current + delta}, hermitian=False)

    def pullback(self, projection):
        """Connection on the source of a gluing projection, A(tau, sigma) = A_f(pi tau, pi sigma)."""
        if projection.target is not self.complex:
            raise TransportError("Connection does not live on the glued complex")
        K = projection.source
        metrics = tuple(
            np.stack([self.bundle.metric(q, projection.image(q, i)[0]) for i in range(K.count(q))])
            if K.count(q) else np.zeros((0, self.rank, self.rank), dtype=self.dtype)
            for q in range(K.dim + 1)
        )
        bundle = Bundle(K, self.rank, self.field, metrics)
        transports = []
        for q in range(K.dim):
            array = np.zeros((K.count(q + 1), q + 2, self.rank, self.rank), dtype=self.dtype)
            for t in range(K.count(q + 1)):
                image_tau = (q + 1, projection.image(q + 1, t)[0])
                for k, (j, _) in enumerate(K.faces(q + 1, t)):
                    array[t, k] = self.transport(image_tau, (q, projection.image(q, j)[0]))
            transports.append(array)
        return Connection(bundle, transports, hermitian=self.hermitian, tolerance=self.tolerance)


def _identity_transports(K, rank, dtype):
    eye = np.eye(rank, dtype=dtype)
    return [np.broadcast_to(eye, (K.count(q + 1), q + 2, rank, rank)).copy() for q in range(K.dim)]


def trivial_connection(K, rank=1, field="real"):
    bundle = Bundle(K, rank, field)
    return Connection(bundle, _identity_transports(K, rank, bundle.dtype))


def pure_gauge_connection(K, gauges, field="real", metric_from_gauge=False, hermitian=True):
    """A(tau, sigma) = g_tau g_sigma^{-1}; flat by construction.

    ``gauges[q]`` has shape ``(n_q, r, r)``. With ``metric_from_gauge`` the fiber
    metrics become h_sigma = (g_sigma g_sigma^†)^{-1}, which makes any invertible
    gauge Hermitian.
    """
    dtype = _dtype(field)
    gauges = [np.asarray(g, dtype=dtype) for g in gauges]
    rank = gauges[0].shape[-1]
    if any(np.abs(np.linalg.det(g)).min(initial=np.inf) < 1e-14 for g in gauges):
        raise TransportError("Singular gauge transformation")
    inverses = [np.linalg.inv(g) for g in gauges]
    metrics = None
    if metric_from_gauge:
        metrics = tuple(np.linalg.inv(g @ np.conj(np.swapaxes(g, -1, -2))) for g in gauges)
    bundle = Bundle(K, rank, field, metrics)
    transports = []
    for q in range(K.dim):
        array = np.zeros((K.count(q + 1), q + 2, rank, rank), dtype=dtype)
        for t in range(K.count(q + 1)):
            for k, (j, _) in enumerate(K.faces(q + 1, t)):
                array[t, k] = gauges[q + 1][t] @ inverses[q][j]
        transports.append(array)
    return Connection(bundle, transports, hermitian=hermitian)


def is_unitary(U, tolerance=1e-12):
    U = np.atleast_2d(U)
    return bool(np.abs(U.conj().T @ U - np.eye(U.shape[0])).max() <= tolerance)


def holonomy_twist_connection(K, U, field=None):
    """Flat connection on a cycle whose loop holonomy is U, inserted on one edge."""
    U = np.atleast_2d(np.asarray(U))
    if field is None:
        field = "complex" if np.iscomplexobj(U) else "real"
    if not is_unitary(U):
        raise TransportError("Holonomy must be unitary")
    try:
        _, edges, _ = K.cycle_order()
    except ComplexError as exc:
        raise TransportError("Holonomy twist needs a cycle") from exc
    rank = U.shape[0]
    bundle = Bundle(K, rank, field)
    transports = _identity_transports(K, rank, bundle.dtype)
    transports[0][edges[0], 0] = U
    return Connection(bundle, transports)


def random_unitary(rng, rank, field="real"):
    if rank == 1:
        if field == "complex":
            return np.array([[np.exp(1j * rng.uniform(0, 2 * np.pi))]])
        return np.array([[rng.choice([-1.0, 1.0])]])
    if field == "complex":
        return unitary_group.rvs(rank, random_state=rng)
    return ortho_group.rvs(rank, random_state=rng)


def random_gauges(K, rank, field, rng):
    return [
        np.stack([random_unitary(rng, rank, field) for _ in range(K.count(q))])
        for q in range(K.dim + 1)
    ]


def gauge_transform(A, gauges):
    """Conjugate every transport, A'(tau, sigma) = g_tau A(tau, sigma) g_sigma^{-1}."""
    K = A.complex
    inverses = [np.linalg.inv(g) for g in gauges]
    transports = []
    for q in range(K.dim):
        array = A.transports[q].copy()
        for t in range(K.count(q + 1)):
            for k, (j, _) in enumerate(K.faces(q + 1, t)):
                array[t, k] = gauges[q + 1][t] @ array[t, k] @ inverses[q][j]
        transports.append(array)
    return Connection(A.bundle, transports, hermitian=A.hermitian, tolerance=A.tolerance)


def curvature(K, A, leaf):
    if leaf not in A.double.leaves:
        raise TransportError(f"{leaf} is not a leaf of D(K)")
    return A.curvature(leaf)


def is_flat(K, A, tolerance=None):
    return A.is_flat(tolerance)


def covariant_d(K, A, phi):
    """(d_A phi)(tau) = sum over faces sigma of tau of sign * A(tau, sigma) phi(sigma)."""
    D = A.covariant_d(phi.degree)
    values = D @ phi.flat
    return Cochain(phi.degree + 1, values.reshape(K.count(phi.degree + 1), A.rank))


def adjoint_d(K, A, W, q):
    """Adjoint of d_A: (q+1)-cochains -> q-cochains, Q_q^{-1} D^† Q_{q+1}."""
    D = A.covariant_d(q).matrix
    Q_low = gram(K, W, A, q).matrix
    Q_high = gram(K, W, A, q + 1).matrix
    factor = cho_factor(Q_low)
    matrix = cho_solve(factor, D.conj().T @ Q_high)
    return LinearOperator(matrix, A.bundle.basis(q + 1), A.bundle.basis(q), tag=f"codiff_{q + 1}")
