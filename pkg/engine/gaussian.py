"""Gaussian free field on a complex: actions, Poisson and Dirichlet-to-Neumann
operators, partition functions and the gluing identities.

All Gaussian integrals are evaluated in closed form. Complex fields are
integrated over real and imaginary parts separately, so a complex interior
of dimension k contributes (2 pi)^k / det(B)."""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import dblquad, quad
from scipy.linalg import cho_factor, cho_solve, eigh, eigvalsh, LinAlgError

from .bundle import trivial_connection
from .conf import engine_setting
from .exceptions import DivergentIntegralError, GluingError, QuadratureError, SingularFormError
from .hodge import DirichletProblemSpace, det_prime, log_det_positive
from .metric import block_decompose, gram, induced_weights
from .operators import fiber_indices
from .simplicial import BoundarySubcomplex, glue

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2 * np.pi))


def schur_complement(matrix, keep, eliminate):
    """matrix[keep, keep] - matrix[keep, elim] matrix[elim, elim]^{-1} matrix[elim, keep]."""
    keep_block = matrix[np.ix_(keep, keep)]
    if len(eliminate) == 0:
        return keep_block
    free = matrix[np.ix_(eliminate, eliminate)]
    try:
        factor = cho_factor(free)
    except LinAlgError as exc:
        raise SingularFormError("Eliminated block is not positive definite") from exc
    coupling = matrix[np.ix_(eliminate, keep)]
    return keep_block - matrix[np.ix_(keep, eliminate)] @ cho_solve(factor, coupling)


def _real_scale(field):
    return 2 if field == "complex" else 1


def _mass_term(Q, mass, rank):
    """m^2 Q for a scalar mass, M^{1/2} Q M^{1/2} for a per-vertex profile."""
    profile = np.asarray(mass, dtype=float)
    if profile.ndim == 0:
        return float(profile) * Q
    if profile.min() < 0:
        raise ValueError("Mass profile must be non-negative")
    root = np.repeat(np.sqrt(profile), rank)
    return root[:, None] * Q * root[None, :]


def _sub_indices(K, sub, q, rank):
    return fiber_indices(sub.positions(q), rank) if sub is not None else np.zeros(0, dtype=int)


def boundary_form(K, L, W, A, mass):
    """Matrix of 2 S_L on cochains of L, with weights restricted from K."""
    A = trivial_connection(K) if A is None else A
    r = A.rank
    vertices = _sub_indices(K, L, 0, r)
    Q0 = gram(K, W, A, 0).matrix[np.ix_(vertices, vertices)]
    profile = np.asarray(mass, dtype=float)
    if profile.ndim:
        profile = profile[list(L.positions(0))]
    form = _mass_term(Q0, profile, r)
    edges = _sub_indices(K, L, 1, r)
    if K.dim >= 1 and edges.size:
        D = A.covariant_d(0).matrix[np.ix_(edges, vertices)]
        Q1 = gram(K, W, A, 1).matrix[np.ix_(edges, edges)]
        form = form + D.conj().T @ Q1 @ D
    return form


def action_S_K(K, W, A, mass, phi):
    """1/2 <d_A phi, d_A phi>_K + m^2/2 <phi, phi>_K."""
    A = trivial_connection(K) if A is None else A
    phi = np.asarray(phi).reshape(-1)
    Q0 = gram(K, W, A, 0).matrix
    value = np.vdot(phi, _mass_term(Q0, mass, A.rank) @ phi)
    if K.dim >= 1:
        dphi = A.covariant_d(0).matrix @ phi
        value += np.vdot(dphi, gram(K, W, A, 1).matrix @ dphi)
    return float(np.real(value)) / 2


def action_S_L(K, L, W, A, mass, eta):
    eta = np.asarray(eta).reshape(-1)
    return float(np.real(np.vdot(eta, boundary_form(K, L, W, A, mass) @ eta))) / 2


@dataclass(frozen=True, eq=False)
class ActionForm:
    """2 S_{K,L}(phi) = phi^† B phi, with interior/boundary index blocks."""

    matrix: np.ndarray = field(repr=False)
    space: DirichletProblemSpace
    mass: object
    field: str
    boundary_gram: np.ndarray = field(repr=False)

    @property
    def interior(self):
        return self.space.interior

    @property
    def boundary(self):
        return self.space.boundary

    @property
    def B_ii(self):
        return self.matrix[np.ix_(self.interior, self.interior)]

    @property
    def B_ib(self):
        return self.matrix[np.ix_(self.interior, self.boundary)]

    @property
    def B_bi(self):
        return self.matrix[np.ix_(self.boundary, self.interior)]

    @property
    def B_bb(self):
        return self.matrix[np.ix_(self.boundary, self.boundary)]

    @cached_property
    def interior_factor(self):
        try:
            return cho_factor(self.B_ii)
        except LinAlgError as exc:
            raise SingularFormError(
                "Interior block is singular: a massless component has no Dirichlet data"
            ) from exc

    @cached_property
    def log_det_interior(self):
        return log_det_positive(self.B_ii, "interior block")

    def energy(self, phi):
        phi = np.asarray(phi).reshape(-1)
        return float(np.real(np.vdot(phi, self.matrix @ phi))) / 2

    def compose(self, interior_values, boundary_values):
        phi = np.zeros(self.space.size, dtype=self.matrix.dtype)
        phi[self.interior] = interior_values
        phi[self.boundary] = boundary_values
        return phi


def assemble_action(K, L, W, A=None, mass=0.0):
    """B = D^† Q_1 D + m^2 Q_0 minus the boundary form of L on the boundary block."""
    A = trivial_connection(K) if A is None else A
    space = DirichletProblemSpace(K, L, A.rank)
    Q0 = gram(K, W, A, 0).matrix
    B = _mass_term(Q0, mass, A.rank).astype(A.dtype)
    if K.dim >= 1:
        D = A.covariant_d(0).matrix
        B = B + D.conj().T @ gram(K, W, A, 1).matrix @ D
    if space.boundary.size:
        B[np.ix_(space.boundary, space.boundary)] -= boundary_form(K, L, W, A, mass)
    return ActionForm(B, space, mass, A.field, space.boundary_block(Q0))


def poisson_solve(F, eta):
    """Interior minimizer phi_eta = -B_ii^{-1} B_ib eta."""
    eta = np.asarray(eta).reshape(-1)
    if F.interior.size == 0:
        return np.zeros(0, dtype=F.matrix.dtype)
    return -cho_solve(F.interior_factor, F.B_ib @ eta)


@dataclass(frozen=True, eq=False)
class DNOperator:
    """Dirichlet-to-Neumann operator. ``local`` is the Euclidean quadratic form,
    ``matrix`` = Q_L^{-1} local is self-adjoint for <.,.>_L."""

    local: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    flavor: str = "R^K_L"

    @cached_property
    def matrix(self):
        if self.local.shape[0] == 0:
            return self.local
        return cho_solve(cho_factor(self.gram), self.local)

    def quadratic(self, eta):
        eta = np.asarray(eta).reshape(-1)
        return float(np.real(np.vdot(eta, self.local @ eta)))

    def det_prime(self, rtol=None):
        return det_prime(self.local, rtol=rtol, metric=self.gram)


def dn_operator(F):
    """Schur complement of the interior block: B_bb - B_bi B_ii^{-1} B_ib."""
    local = schur_complement(F.matrix, F.boundary, F.interior)
    return DNOperator(local, F.boundary_gram, "R^K_L")


@dataclass(frozen=True)
class PartitionValue:
    log: float
    action: float
    log_det: float
    dimension: int

    @property
    def value(self):
        return float(np.exp(self.log))


def log_partition(F, eta):
    """log Z = -S_{K,L}(phi_eta) + (k log 2 pi - log det B_ii)/2 in real dimensions."""
    eta = np.asarray(eta).reshape(-1)
    phi = F.compose(poisson_solve(F, eta), eta)
    action = F.energy(phi)
    scale = _real_scale(F.field)
    log_det = scale * F.log_det_interior
    k = scale * F.interior.size
    return PartitionValue(-action + (k * LOG_2PI - log_det) / 2, action, log_det, k)


def partition_function(K, L, W, A, mass, eta):
    return log_partition(assemble_action(K, L, W, A, mass), eta)


def partition_by_quadrature(F, eta, tolerance=1e-10):
    """Oracle: integrate exp(-S_{K,L}) numerically over one or two real interior
    coordinates. Returns log Z."""
    eta = np.asarray(eta).reshape(-1)
    if F.field == "complex" or F.interior.size not in (1, 2):
        raise ValueError("Quadrature oracle needs one or two real interior coordinates")
    minimum = F.energy(F.compose(poisson_solve(F, eta), eta))

    def weight(*x):
        return np.exp(-(F.energy(F.compose(np.array(x), eta)) - minimum))

    if F.interior.size == 1:
        value, error = quad(weight, -np.inf, np.inf, epsabs=1e-14, epsrel=tolerance)
    else:
        value, error = dblquad(
            lambda y, x: weight(x, y), -np.inf, np.inf, -np.inf, np.inf, epsabs=1e-14, epsrel=tolerance
        )
    if not np.isfinite(value) or error > 1e3 * tolerance * abs(value):
        raise QuadratureError(f"Quadrature did not converge (estimate {value}, error {error})")
    return float(np.log(value) - minimum)


# Gluing


@dataclass(frozen=True, eq=False)
class GluedSystem:
    """K with L = L1 + L2 + L3, the gluing f: L1 -> L2 and everything on K_f.

    The connection lives on K_f and is pulled back to K; the metric on K_f is
    induced from K so that S_K = S_{K_f} + S_{L2} on pulled-back fields.
    """

    K: object
    W: object
    A: object
    gluing: object
    L3: object
    K_f: object
    projection: object
    W_f: object
    A_f: object
    L3_f: object
    mass: float = 0.0

    @property
    def L1(self):
        return self.gluing.source

    @property
    def L2(self):
        return self.gluing.target

    @property
    def rank(self):
        return self.A.rank

    @property
    def field(self):
        return self.A.field

    @cached_property
    def boundary(self):
        return self.L1.union(self.L2, self.L3, name="L")

    @cached_property
    def form_K(self):
        return assemble_action(self.K, self.boundary, self.W, self.A, self.mass)

    @cached_property
    def form_f(self):
        return assemble_action(self.K_f, self.L3_f, self.W_f, self.A_f, self.mass)

    @cached_property
    def dn_K(self):
        return dn_operator(self.form_K)

    @cached_property
    def dn_f(self):
        return dn_operator(self.form_f)

    def boundary_slot(self, vertex_position):
        """Position of a vertex of L inside the boundary basis of form_K."""
        return self.form_K.space.boundary_vertices.index(vertex_position)

    @cached_property
    def seam_embedding(self):
        """P: C^0(L2) -> C^0(L), eta -> (f^* eta, eta, 0)."""
        r = self.rank
        L2 = self.L2.positions(0)
        P = np.zeros((len(self.form_K.space.boundary_vertices) * r, len(L2) * r))
        eye = np.eye(r)
        inverse = {}
        for u, (v, _) in self.gluing.simplex_map[0].items():
            inverse[v] = u
        for k, v in enumerate(L2):
            for w in (v, inverse[v]):
                s = self.boundary_slot(w)
                P[s * r:(s + 1) * r, k * r:(k + 1) * r] = eye
        return P

    @cached_property
    def rest_embedding(self):
        r = self.rank
        L3 = self.L3.positions(0)
        E = np.zeros((len(self.form_K.space.boundary_vertices) * r, len(L3) * r))
        eye = np.eye(r)
        for k, v in enumerate(L3):
            s = self.boundary_slot(v)
            E[s * r:(s + 1) * r, k * r:(k + 1) * r] = eye
        return E

    @cached_property
    def seam_indices_f(self):
        """Fiber indices in K_f of the seam, in the order of L2's vertices."""
        images = [self.projection.image(0, v)[0] for v in self.L2.positions(0)]
        return fiber_indices(images, self.rank)

    @cached_property
    def rest_indices_f(self):
        images = [self.projection.image(0, v)[0] for v in self.L3.positions(0)]
        return fiber_indices(images, self.rank)

    @cached_property
    def interior_indices_f(self):
        taken = set(self.seam_indices_f.tolist()) | set(self.rest_indices_f.tolist())
        return np.array([i for i in range(self.K_f.count(0) * self.rank) if i not in taken], dtype=int)

    @cached_property
    def seam_form(self):
        """Matrix of 2 S_{L2} (with mass)."""
        return boundary_form(self.K, self.L2, self.W, self.A, self.mass)

    @cached_property
    def seam_gram(self):
        idx = _sub_indices(self.K, self.L2, 0, self.rank)
        return gram(self.K, self.W, self.A, 0).matrix[np.ix_(idx, idx)]

    @cached_property
    def seam_scale(self):
        """Entry scale of the forms R_c is assembled from; R_c itself may vanish."""
        return max(np.abs(self.dn_K.local).max(initial=0.0), np.abs(self.seam_form).max(initial=0.0))


def glued_system(K, f, W, connection=None, L3=None, mass=0.0):
    """Glue K along f and carry weights and connection along.

    ``connection`` is a Connection on K_f, a callable building one from K_f,
    or None for the trivial real line bundle.
    """
    K_f, projection = glue(K, f)
    if L3 is None:
        L3 = BoundarySubcomplex(K, ((),) * (K.dim + 1), "rest")
    glued_vertices = set(f.source.vertices) | set(f.target.vertices)
    if glued_vertices & set(L3.vertices):
        raise GluingError("The kept boundary L3 must be disjoint from the glued components")
    W_f = induced_weights(W, projection)
    if connection is None:
        A_f = trivial_connection(K_f)
    elif callable(connection):
        A_f = connection(K_f)
    else:
        A_f = connection
    A = A_f.pullback(projection)
    L3_f = projection.push_subcomplex(L3)
    return GluedSystem(K, W, A, f, L3, K_f, projection, W_f, A_f, L3_f, mass)


@dataclass(frozen=True, eq=False)
class GluedDN:
    """R_c(K_f, L2) with its local form R^loc_c = Q_{L2} R_c, and the seam
    Schur complement of the glued action as an independent cross-check."""

    operator: DNOperator
    seam_schur: np.ndarray = field(repr=False)

    @property
    def local(self):
        return self.operator.local

    @property
    def matrix(self):
        return self.operator.matrix

    @property
    def coherence(self):
        """Largest entry of R^loc_c minus the seam Schur complement, relative."""
        if self.local.size == 0:
            return 0.0
        scale = max(float(np.abs(self.local).max()), 1.0)
        return float(np.abs(self.local - self.seam_schur).max() / scale)


def dn_glued(system):
    P = system.seam_embedding
    local = P.T @ system.dn_K.local @ P + system.seam_form
    schur = schur_complement(system.form_f.matrix, system.seam_indices_f, system.interior_indices_f)
    return GluedDN(DNOperator(local, system.seam_gram, "R_c"), schur)


@dataclass(frozen=True)
class SeamIntegral:
    """Integral over eta2 of exp(-1/2 (eta2^† M eta2 + 2 Re eta2^† g + c))."""

    log: float
    log_det: float
    quadratic: float
    constant: float


def seam_integral(system, eta3, glued=None):
    glued = dn_glued(system) if glued is None else glued
    R = system.dn_K.local
    P, E = system.seam_embedding, system.rest_embedding
    boundary = E @ np.asarray(eta3).reshape(-1)
    M = glued.local
    g = P.T @ R @ boundary
    c = float(np.real(np.vdot(boundary, R @ boundary)))
    scale = _real_scale(system.field)
    if M.shape[0] == 0:
        return SeamIntegral(-c / 2, 0.0, 0.0, c)
    cutoff = engine_setting("KERNEL_RTOL") * system.seam_scale * M.shape[0]
    if eigvalsh(M).min() <= cutoff:
        raise DivergentIntegralError("Seam form has a zero or negative mode")
    factor = cho_factor(M)
    quadratic = float(np.real(np.vdot(g, cho_solve(factor, g))))
    log_det = scale * float(2.0 * np.sum(np.log(np.abs(np.diag(factor[0])))))
    k = scale * M.shape[0]
    log_value = (k * LOG_2PI - log_det) / 2 + quadratic / 2 - c / 2
    return SeamIntegral(log_value, log_det, quadratic, c)


def _relative(lhs, rhs):
    return float(abs(np.expm1(lhs - rhs)))


def _rest_data(system, eta3):
    if eta3 is None:
        return np.zeros(system.rest_indices_f.size, dtype=system.A.dtype)
    eta3 = np.asarray(eta3).reshape(-1)
    if eta3.size != system.rest_indices_f.size:
        raise ValueError(f"Boundary data on L3 has size {eta3.size}, expected {system.rest_indices_f.size}")
    return eta3


@dataclass(frozen=True)
class GluingReport:
    kind: str
    lhs: float
    rhs: float
    residual: float
    kernel_dims: tuple = ()
    asserted: bool = True
    extra: dict = field(default_factory=dict)


def verify_partition_gluing(system, eta3=None):
    """Seam integral of Z_K(f^* eta2, eta2, eta3) exp(-S_{L2}(eta2)) against Z_{K_f,L3}(eta3).

    Compared in log space; the residual is |LHS/RHS - 1|.
    """
    eta3 = _rest_data(system, eta3)
    seam = seam_integral(system, eta3)
    F = system.form_K
    scale = _real_scale(system.field)
    log_Z_K = (scale * F.interior.size * LOG_2PI - scale * F.log_det_interior) / 2
    lhs = log_Z_K + seam.log
    rhs = log_partition(system.form_f, eta3).log
    return GluingReport("partition", float(lhs), float(rhs), _relative(lhs, rhs))


def verify_critical_action_gluing(system, eta3=None):
    """S_{K_f,L3}(phi_eta3) against the minimum over the seam data of S_{K,L} + S_{L2}."""
    eta3 = _rest_data(system, eta3)
    lhs = system.dn_f.quadratic(eta3) / 2 if eta3.size else 0.0
    seam = seam_integral(system, eta3)
    rhs = (seam.constant - seam.quadratic) / 2
    return GluingReport("critical", float(lhs), float(rhs), float(abs(lhs - rhs) / max(1.0, abs(lhs))))


def q_factored_sides(system, glued=None):
    """Both sides of det(Delta_{K_f} + m^2) / det(Delta_K + m^2) =
    det R_c det Q_{L2} / det(Q_seam - A^† Q_int^{-1} A).

    The left side comes from eigenvalues of the pencils (B, Q) on the two
    interiors, the right side from the block decomposition of the glued Gram.
    """
    glued = dn_glued(system) if glued is None else glued
    scale = _real_scale(system.field)
    form_f, form_K = system.form_f, system.form_K
    Q_f = form_f.space.interior_block(gram(system.K_f, system.W_f, system.A_f, 0).matrix)
    Q_K = form_K.space.interior_block(gram(system.K, system.W, system.A, 0).matrix)
    lhs = np.sum(np.log(eigh(form_f.B_ii, Q_f, eigvals_only=True)))
    if form_K.interior.size:
        lhs -= np.sum(np.log(eigh(form_K.B_ii, Q_K, eigvals_only=True)))

    # interior of K_f = interior of K plus the seam
    position = {index: k for k, index in enumerate(form_f.interior.tolist())}
    interior = [position[i] for i in system.interior_indices_f.tolist() if i in position]
    seam = [position[i] for i in system.seam_indices_f.tolist()]
    Q_int, A, Q_seam = block_decompose(Q_f, interior, seam)
    if Q_int.shape[0]:
        Q_seam = Q_seam - A.conj().T @ cho_solve(cho_factor(Q_int), A)
    rhs = (
        glued.operator.det_prime().log
        + log_det_positive(system.seam_gram, "seam Gram")
        - log_det_positive(Q_seam, "seam block of the glued Gram")
    )
    return float(scale * lhs), float(scale * rhs)


def _unasserted(kind, reason, glued=None):
    logger.warning("Determinant gluing row not asserted: %s", reason)
    nan = float("nan")
    extra = {"schur_coherence": glued.coherence if glued is not None else nan, "q_factored_residual": nan}
    return GluingReport(kind, nan, nan, nan, (), False, extra)


def verify_determinant_gluing(system, rtol=None):
    """det(Delta^loc_{K_f} + m^2 Q) / det(Delta^loc_K + m^2 Q) = det R^loc_c.

    With m = 0 the pseudodeterminant identity is asserted only when the
    kernels on both sides match.
    """
    try:
        glued = dn_glued(system)
    except SingularFormError as exc:
        return _unasserted("determinant", str(exc))
    scale = _real_scale(system.field)
    extra = {"schur_coherence": glued.coherence}
    if np.all(np.asarray(system.mass) > 0):
        lhs = scale * (system.form_f.log_det_interior - system.form_K.log_det_interior)
        rhs = scale * log_det_positive(glued.local, "glued Dirichlet-to-Neumann form")
        kernels = (0, 0, 0)
        asserted = True
    else:
        det_f = det_prime(system.form_f.B_ii, rtol)
        det_K = det_prime(system.form_K.B_ii, rtol)
        det_R = det_prime(glued.local, rtol, scale=system.seam_scale)
        lhs = scale * (det_f.log - det_K.log)
        rhs = scale * det_R.log
        kernels = (det_f.kernel_dim, det_K.kernel_dim, det_R.kernel_dim)
        asserted = det_f.kernel_dim == det_K.kernel_dim
        if not asserted:
            logger.warning("Kernel dimensions differ across the gluing identity: %s", kernels)
    if kernels[0] == 0 and kernels[2] == 0:
        extra["q_factored_residual"] = _relative(*q_factored_sides(system, glued))
    else:
        extra["q_factored_residual"] = float("nan")
    return GluingReport("determinant", float(lhs), float(rhs), _relative(lhs, rhs), kernels, asserted, extra)


def dn_defect(F, dn=None):
    """Largest defect of <eta, R eta> = 2 S_{K,L}(phi_eta + eta) over a full
    boundary basis, relative to the largest entry of R."""
    dn = dn_operator(F) if dn is None else dn
    nb = F.boundary.size
    if nb == 0:
        return 0.0
    X = np.zeros((F.space.size, nb), dtype=F.matrix.dtype)
    X[F.boundary] = np.eye(nb)
    if F.interior.size:
        X[F.interior] = -cho_solve(F.interior_factor, F.B_ib)
    energy = X.conj().T @ F.matrix @ X
    scale = max(float(np.abs(dn.local).max()), 1.0)
    return float(np.abs(energy - dn.local).max() / scale)
