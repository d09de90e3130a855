"""Weight systems (Riemannian norms on cochains), Gram operators, locality,
restriction to boundaries, induced metrics on glued complexes and the block
decomposition used by the Q-factored gluing formula."""

import logging
from typing import NamedTuple

import numpy as np

from .conf import engine_setting
from .exceptions import GluingError, NotPositiveDefiniteError, WeightError
from .operators import Basis, LinearOperator, fiber_indices
from .simplicial import permutation_sign

logger = logging.getLogger(__name__)


def check_positive_definite(matrix, what, rtol=None):
    """Raises NotPositiveDefiniteError unless the smallest eigenvalue exceeds
    ``rtol`` times the largest one."""
    if matrix.shape[0] == 0:
        return
    rtol = engine_setting("GRAM_RTOL") if rtol is None else rtol
    scale = max(1.0, float(np.abs(matrix).max()))
    if np.abs(matrix - matrix.conj().T).max() > 1e-12 * scale:
        raise NotPositiveDefiniteError(f"{what} is not self-adjoint")
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues[0] <= rtol * max(eigenvalues[-1], 0.0):
        raise NotPositiveDefiniteError(
            f"{what} is not positive definite (smallest eigenvalue {eigenvalues[0]:.3e})",
            float(eigenvalues[0]),
        )


class WeightSystem:
    """Symmetric weights |sigma, tau| per degree, stored as dense matrices."""

    def __init__(self, complex, matrices, label="", check=True, rtol=None):
        self.complex = complex
        self.label = label
        if len(matrices) != complex.dim + 1:
            raise WeightError(f"Expected weights for degrees 0..{complex.dim}, got {len(matrices)}")
        stored = []
        for q, matrix in enumerate(matrices):
            matrix = np.asarray(matrix, dtype=float)
            n = complex.count(q)
            if matrix.shape != (n, n):
                raise WeightError(f"Weights of degree {q} have shape {matrix.shape}, expected {(n, n)}")
            if not np.array_equal(matrix, matrix.T):
                if np.abs(matrix - matrix.T).max() > 1e-14 * max(1.0, np.abs(matrix).max()):
                    raise WeightError(f"Weights of degree {q} are not symmetric")
                matrix = (matrix + matrix.T) / 2
            if n and np.diag(matrix).min() <= 0:
                raise WeightError(f"Weights of degree {q} have a non-positive diagonal entry")
            if check:
                check_positive_definite(matrix, f"Weight form of degree {q}", rtol)
            matrix.setflags(write=False)
            stored.append(matrix)
        self.matrices = tuple(stored)

    def __repr__(self):
        return f"WeightSystem({self.label or 'custom'}, counts={self.complex.counts()})"

    def degree(self, q):
        return self.matrices[q]

    def weight(self, q, i, j):
        return float(self.matrices[q][i, j])

    def pairs(self, q):
        """Nonzero off-diagonal pairs ``(i, j)`` with ``i < j``."""
        rows, cols = np.nonzero(np.triu(self.matrices[q], k=1))
        return list(zip(rows.tolist(), cols.tolist()))

    def is_diagonal(self):
        return all(not self.pairs(q) for q in range(len(self.matrices)))

    def with_entries(self, entries, label=None):
        """Copy with ``{(q, i, j): value}`` set symmetrically."""
        matrices = [m.copy() for m in self.matrices]
        for (q, i, j), value in entries.items():
            matrices[q][i, j] = value
            matrices[q][j, i] = value
        return WeightSystem(self.complex, matrices, label or self.label)


def _per_degree(K, values):
    if isinstance(values, dict):
        out = [np.ones(K.count(q)) for q in range(K.dim + 1)]
        for (q, i), value in values.items():
            out[q][i] = value
        return out
    return [np.asarray(v, dtype=float).reshape(K.count(q)) for q, v in enumerate(values)]


def diagonal_weights(K, values=None, label="diagonal"):
    """|sigma, tau| = value(sigma) delta_{sigma, tau}. ``values`` defaults to all ones."""
    if values is None:
        values = [np.ones(K.count(q)) for q in range(K.dim + 1)]
        label = "diagonal-unit"
    per_degree = _per_degree(K, values)
    for q, v in enumerate(per_degree):
        if v.size and v.min() <= 0:
            raise WeightError(f"Diagonal weight of degree {q} must be positive")
    return WeightSystem(K, [np.diag(v) for v in per_degree], label)


def _edge_lengths(K, lengths):
    lengths = np.asarray(lengths, dtype=float).reshape(K.count(1))
    if lengths.size and lengths.min() <= 0:
        raise WeightError("Edge lengths must be positive")
    return lengths


def lumped_weights_1d(K, lengths):
    """Vertex weight = mean length of the incident edges, edge weight = 1/length."""
    if K.dim != 1:
        raise WeightError("Lumped weights are defined on 1-complexes")
    lengths = _edge_lengths(K, lengths)
    vertex = np.array([
        np.mean([lengths[e] for e, _ in K.cofaces(0, v)]) for v in range(K.count(0))
    ])
    return diagonal_weights(K, [vertex, 1.0 / lengths], label="lumped")


def interval_element(h):
    """Whitney element of an edge of length h: (vertex diagonal, vertex off-diagonal, edge weight).

    Plain arithmetic so that exact or multiprecision lengths pass through.
    """
    return h / 3, h / 6, 1 / h


def whitney_weights_1d(K, lengths):
    if K.dim != 1:
        raise WeightError("whitney_weights_1d needs a 1-complex")
    lengths = _edge_lengths(K, lengths)
    W0 = np.zeros((K.count(0), K.count(0)))
    W1 = np.zeros((K.count(1), K.count(1)))
    for e, (a, b) in enumerate(K.level(1)):
        diagonal, off, edge = interval_element(lengths[e])
        i, j = K.vertex_position(a), K.vertex_position(b)
        W0[i, i] += diagonal
        W0[j, j] += diagonal
        W0[i, j] += off
        W0[j, i] += off
        W1[e, e] = edge
    return WeightSystem(K, [W0, W1], label="whitney")


LOCAL_EDGES = ((0, 1), (0, 2), (1, 2))


def triangle_element(l01, l02, l12):
    """Whitney element of a flat triangle from its edge lengths.

    Returns ``(mass, edge_gram, area)``: the 3x3 matrix of vertex integrals
    of mu_i mu_j, the 3x3 Gram of the Whitney 1-forms on ``LOCAL_EDGES``, and
    the area (the 2-form weight is 1/area).
    """
    for a, b, c in ((l01, l02, l12), (l02, l12, l01), (l12, l01, l02)):
        if not a < b + c:
            raise WeightError(f"Edge lengths ({l01}, {l02}, {l12}) violate the strict triangle inequality")
    x2 = (l01 ** 2 + l02 ** 2 - l12 ** 2) / (2 * l01)
    y2 = np.sqrt(l02 ** 2 - x2 ** 2)
    area = l01 * y2 / 2
    chart = np.array([[1.0, 1.0, 1.0], [0.0, l01, x2], [0.0, 0.0, y2]])
    gradients = np.linalg.inv(chart)[:, 1:]
    G = gradients @ gradients.T
    mass = area / 12 * (np.ones((3, 3)) + np.eye(3))
    edge_gram = np.zeros((3, 3))
    for p, (i, j) in enumerate(LOCAL_EDGES):
        for s, (k, l) in enumerate(LOCAL_EDGES):
            edge_gram[p, s] = (
                mass[i, k] * G[j, l] - mass[i, l] * G[j, k]
                - mass[j, k] * G[i, l] + mass[j, l] * G[i, k]
            )
    return mass, edge_gram, area


def whitney_weights_2d(K, lengths):
    if K.dim != 2:
        raise WeightError("whitney_weights_2d needs a 2-complex")
    lengths = _edge_lengths(K, lengths)
    W0 = np.zeros((K.count(0), K.count(0)))
    W1 = np.zeros((K.count(1), K.count(1)))
    W2 = np.zeros((K.count(2), K.count(2)))
    for t, vertices in enumerate(K.level(2)):
        edges, signs = [], []
        for i, j in LOCAL_EDGES:
            local = (vertices[i], vertices[j])
            e = K.index(local)[1]
            edges.append(e)
            signs.append(permutation_sign(local, K.level(1)[e]))
        mass, edge_gram, area = triangle_element(*(lengths[e] for e in edges))
        points = [K.vertex_position(v) for v in vertices]
        W0[np.ix_(points, points)] += mass
        signs = np.array(signs)
        W1[np.ix_(edges, edges)] += edge_gram * np.outer(signs, signs)
        W2[t, t] = 1.0 / area
    return WeightSystem(K, [W0, W1, W2], label="whitney")


def whitney_weights(K, lengths):
    if K.dim == 1:
        return whitney_weights_1d(K, lengths)
    if K.dim == 2:
        return whitney_weights_2d(K, lengths)
    raise WeightError(f"Whitney weights are implemented in dimensions 1 and 2, got {K.dim}")


def gram(K, W, A=None, q=0):
    """Gram operator Q_q: block (sigma, tau) = |sigma, tau| h_sigma A(sigma, tau).

    ``A=None`` means the trivial real line bundle.
    """
    matrix = W.degree(q)
    n = K.count(q)
    if A is None:
        result = matrix.copy()
        basis = Basis(q, tuple(range(n)), 1)
    else:
        r = A.rank
        result = np.zeros((n * r, n * r), dtype=A.dtype)
        for i in range(n):
            h = A.bundle.metric(q, i)
            result[i * r:(i + 1) * r, i * r:(i + 1) * r] = matrix[i, i] * h
        for i, j in W.pairs(q):
            w = matrix[i, j]
            block = w * A.bundle.metric(q, i) @ A.pair_transport((q, i), (q, j))
            result[i * r:(i + 1) * r, j * r:(j + 1) * r] = block
            result[j * r:(j + 1) * r, i * r:(i + 1) * r] = w * A.bundle.metric(q, j) @ A.pair_transport((q, j), (q, i))
        basis = A.bundle.basis(q)
    check_positive_definite(result, f"Gram operator Q_{q}")
    logger.debug("Gram Q_%d assembled, size %d", q, result.shape[0])
    return LinearOperator(result, basis, basis, tag=f"Q_{q}")


def restricted_gram(K, W, A, q, sub):
    """Principal block of Q_q on the simplices of a subcomplex."""
    Q = gram(K, W, A, q).matrix
    rank = 1 if A is None else A.rank
    idx = fiber_indices(sub.positions(q), rank)
    return Q[np.ix_(idx, idx)]


class LocalityReport(NamedTuple):
    local: bool
    violation: tuple = None

    def __bool__(self):
        return self.local


def is_local(W, K=None):
    """Every nonzero off-diagonal pair must share a cofacet; for q >= 1 the two
    simplices must also share a vertex. Top-degree weights must be diagonal."""
    K = W.complex if K is None else K
    for q in range(K.dim + 1):
        for i, j in W.pairs(q):
            if q == K.dim:
                return LocalityReport(False, (q, i, j))
            above = {t for t, _ in K.cofaces(q, i)} & {t for t, _ in K.cofaces(q, j)}
            if not above:
                return LocalityReport(False, (q, i, j))
            if q >= 1 and not set(K.level(q)[i]) & set(K.level(q)[j]):
                return LocalityReport(False, (q, i, j))
    return LocalityReport(True)


def restrict_to_boundary(W, L):
    """Weights of pairs lying in L, copied from K, as a weight system on L."""
    sub = L.as_complex()
    matrices = []
    for q in range(sub.dim + 1):
        positions = list(L.positions(q))
        matrices.append(W.degree(q)[np.ix_(positions, positions)])
    return WeightSystem(sub, matrices, label=f"{W.label}|{L.name}" if L.name else W.label)


def check_isometry(W, f, tolerance=1e-12):
    """W restricted to the source equals the pullback of W restricted to the target."""
    for q in range(len(f.simplex_map)):
        mapping = f.simplex_map[q]
        source = sorted(mapping)
        for a in source:
            for b in source:
                ja, sa = mapping[a]
                jb, sb = mapping[b]
                expected = sa * sb * W.degree(q)[ja, jb]
                actual = W.degree(q)[a, b]
                if abs(actual - expected) > tolerance * max(1.0, abs(expected)):
                    raise GluingError(
                        f"Gluing is not an isometry: weight {actual} at {W.complex.simplex(q, a)}, "
                        f"{W.complex.simplex(q, b)} against {expected} on the target"
                    )


def induced_weights(W, projection, check_isometric=True):
    """Metric on K_f with <pi^* phi, pi^* psi>_K = <phi, psi>_{K_f} + <phi, psi>_{L2}.

    Local pairs of W are pushed forward through the projection and the
    restriction to the seam is subtracted once. Non-local pairs are dropped.
    """
    K, K_f = projection.source, projection.target
    f = projection.gluing
    if check_isometric:
        check_isometry(W, f)
    matrices = []
    dropped = 0
    for q in range(K_f.dim + 1):
        out = np.zeros((K_f.count(q), K_f.count(q)))
        matrix = W.degree(q)
        for i in range(K.count(q)):
            a, sa = projection.image(q, i)
            out[a, a] += matrix[i, i]
        for i, j in W.pairs(q):
            above = {t for t, _ in K.cofaces(q, i)} & {t for t, _ in K.cofaces(q, j)} if q < K.dim else set()
            if not above:
                dropped += 1
                continue
            a, sa = projection.image(q, i)
            b, sb = projection.image(q, j)
            out[a, b] += sa * sb * matrix[i, j]
            out[b, a] += sa * sb * matrix[i, j]
        target = f.target.positions(q)
        images = [projection.image(q, i)[0] for i in target]
        out[np.ix_(images, images)] -= matrix[np.ix_(target, target)]
        matrices.append(out)
    if dropped:
        logger.warning("Dropped %d non-local weight pairs while inducing the glued metric", dropped)
    return WeightSystem(K_f, matrices, label=f"{W.label}-induced")


def mayer_vietoris_check(W, projection, W_f=None):
    """Largest defect of <phi,psi>_K - <phi_f,psi_f>_{K_f} - <phi,psi>_{L} over
    basis cochains pulled back from K_f, relative to the largest weight."""
    if W_f is None:
        W_f = induced_weights(W, projection, check_isometric=False)
    f = projection.gluing
    worst = 0.0
    scale = max(np.abs(m).max(initial=0.0) for m in W.matrices)
    for q in range(projection.target.dim + 1):
        P = projection.pullback_matrix(q)
        pulled = P.T @ W.degree(q) @ P
        seam = np.zeros_like(pulled)
        target = f.target.positions(q)
        images = [projection.image(q, i)[0] for i in target]
        seam[np.ix_(images, images)] = W.degree(q)[np.ix_(target, target)]
        defect = np.abs(pulled - W_f.degree(q) - seam).max(initial=0.0)
        worst = max(worst, defect)
    return worst / max(scale, 1e-300)


def block_decompose(Q, interior, seam):
    """Blocks (Q_interior, A, Q_seam) of Q for an interior/seam split of its indices."""
    interior = np.asarray(interior, dtype=int)
    seam = np.asarray(seam, dtype=int)
    covered = np.concatenate([interior, seam])
    if sorted(covered.tolist()) != list(range(Q.shape[0])):
        raise WeightError("Interior and seam indices must partition the basis")
    return (
        Q[np.ix_(interior, interior)],
        Q[np.ix_(interior, seam)],
        Q[np.ix_(seam, seam)],
    )


def reassemble(Q_interior, A, Q_seam, interior, seam):
    n = len(interior) + len(seam)
    dtype = np.result_type(Q_interior, A, Q_seam)
    Q = np.zeros((n, n), dtype=dtype)
    Q[np.ix_(interior, interior)] = Q_interior
    Q[np.ix_(interior, seam)] = A
    Q[np.ix_(seam, interior)] = A.conj().T
    Q[np.ix_(seam, seam)] = Q_seam
    return Q
