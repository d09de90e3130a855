"""Whitney and de Rham maps, piecewise flat geometries under standard
subdivision, and the continuum-limit experiments for determinant ratios."""

import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import pairwise
from math import factorial

import numpy as np
from mpmath import mp, mpf
from scipy.integrate import IntegrationWarning, dblquad, quad

from .bundle import Cochain
from .exceptions import ComplexError, QuadratureError, WeightError
from .hodge import det_prime, laplacian
from .metric import block_decompose, gram, interval_element, lumped_weights_1d, whitney_weights
from .simplicial import (
    GluingMap,
    closed_double,
    glue,
    path_complex,
    standard_subdivision,
    star,
)

logger = logging.getLogger(__name__)

# roundoff floor of a double-precision ratio on n edges, in units of eps * n
ROUNDOFF_FACTOR = 1e4


# Classical zeta-regularized determinants used as continuum targets


def circle_zeta_determinant(length):
    """det_zeta of the Laplacian on a circle of circumference ``length``."""
    return length ** 2


def dirichlet_interval_zeta_determinant(length):
    """det_zeta of the Dirichlet Laplacian on an interval of length ``length``."""
    return 2 * length


def doubling_target(length):
    """(det_zeta on the glued circle)^2 / det_zeta on the double, i.e. length^2 / 4."""
    return circle_zeta_determinant(length) ** 2 / circle_zeta_determinant(2 * length)


# Geometry


class PiecewiseFlatGeometry:
    """Edge lengths of a complex of dimension at most 2; every simplex is flat."""

    def __init__(self, complex, lengths):
        self.complex = complex
        if complex.dim > 2:
            raise WeightError(f"Piecewise flat geometry is implemented up to dimension 2, got {complex.dim}")
        lengths = np.asarray(lengths, dtype=float).reshape(complex.count(1))
        if lengths.size and lengths.min() <= 0:
            raise WeightError("Edge lengths must be positive")
        for vertices in complex.level(2):
            a, b, c = (lengths[complex.index(pair)[1]] for pair in
                       ((vertices[0], vertices[1]), (vertices[0], vertices[2]), (vertices[1], vertices[2])))
            if not (a < b + c and b < a + c and c < a + b):
                raise WeightError(f"Triangle {vertices} violates the strict triangle inequality")
        self.lengths = lengths

    @classmethod
    def uniform(cls, complex, h):
        return cls(complex, np.full(complex.count(1), float(h)))

    def __repr__(self):
        return f"PiecewiseFlatGeometry(edges={self.lengths.size}, mesh={self.mesh:.6g})"

    @property
    def mesh(self):
        return float(self.lengths.max(initial=0.0))

    def length(self, a, b):
        return float(self.lengths[self.complex.index((a, b))[1]])

    def refine(self):
        """Standard subdivision with the induced flat lengths: halves of the old
        edges, and medial edges half as long as the parallel side."""
        subdivision = standard_subdivision(self.complex)
        refined = subdivision.complex
        lengths = np.zeros(refined.count(1))
        for i, (a, b) in enumerate(self.complex.level(1)):
            for _, e in subdivision.children[(1, i)][1:]:
                lengths[e] = self.lengths[i] / 2
        for i, (a, b, c) in enumerate(self.complex.level(2)):
            medial = subdivision.children[(2, i)][:3]
            # medial edges are parallel to bc, ac and ab
            for (_, e), side in zip(medial, ((b, c), (a, c), (a, b))):
                lengths[e] = self.length(*side) / 2
        return subdivision, PiecewiseFlatGeometry(refined, lengths)


@dataclass(frozen=True, eq=False)
class RefinementLevel:
    complex: object
    geometry: PiecewiseFlatGeometry
    weights: object
    subdivision: object = None


WEIGHT_BUILDERS = {
    "whitney": lambda g: whitney_weights(g.complex, g.lengths),
    "lumped": lambda g: lumped_weights_1d(g.complex, g.lengths),
}


class RefinementSequence:
    """Successive standard subdivisions, each with its geometry and weights."""

    def __init__(self, levels):
        self.levels = list(levels)

    @classmethod
    def build(cls, geometry, steps, weights="whitney"):
        builder = WEIGHT_BUILDERS[weights]
        levels = [RefinementLevel(geometry.complex, geometry, builder(geometry))]
        for _ in range(steps):
            subdivision, geometry = geometry.refine()
            levels.append(RefinementLevel(geometry.complex, geometry, builder(geometry), subdivision))
        logger.debug("Refinement sequence with mesh sizes %s", [level.geometry.mesh for level in levels])
        return cls(levels)

    def __len__(self):
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    def __getitem__(self, k):
        return self.levels[k]

    def mesh_sizes(self):
        return [level.geometry.mesh for level in self.levels]

    def track(self, sub, level):
        """Image of a subcomplex of the first level in level ``level``."""
        for k in range(1, level + 1):
            sub = self.levels[k].subdivision.refine(sub)
        return sub


# Whitney and de Rham maps


@dataclass(frozen=True)
class WhitneyTerm:
    """coefficient * mu_{mu} d mu_{dmu[0]} ^ ... on the top simplex ``top``."""

    top: int
    coefficient: int
    mu: object
    dmu: tuple


@dataclass(frozen=True)
class WhitneyForm:
    degree: int
    simplex: tuple
    terms: tuple = field(repr=False)

    @property
    def support(self):
        return tuple(sorted({term.top for term in self.terms}))

    def on(self, top):
        return tuple(term for term in self.terms if term.top == top)


def whitney_coefficients(K, q, i, geometry=None):
    """W(tau*) = q! sum_k (-1)^k mu_{i_k} d mu_{i_0} ^ .. (omit i_k) .. ^ d mu_{i_q}
    on every top simplex containing tau.

    The form only depends on barycentric coordinates; ``geometry`` is accepted
    for symmetry with the other maps.
    """
    if K.dim > 2 or q > K.dim or q < 0:
        raise ComplexError(f"Whitney forms of degree {q} on a {K.dim}-complex are not supported")
    tau = K.simplex(q, i)
    tops = sorted(s.index for s in star(K, tau) if s.dim == K.dim)
    terms = []
    for t in tops:
        for k, v in enumerate(tau.vertices):
            terms.append(WhitneyTerm(t, factorial(q) * (-1) ** k, v, tau.vertices[:k] + tau.vertices[k + 1:]))
    return WhitneyForm(q, tau.vertices, tuple(terms))


def _chart_determinant(vertices, dmu):
    """Coefficient of d mu_{v1} ^ .. ^ d mu_{vq} in d mu_{dmu}, on the simplex
    ``vertices`` charted by (mu_{v1}, .., mu_{vq})."""
    q = len(vertices) - 1
    rows = []
    for label in dmu:
        k = vertices.index(label)
        rows.append(-np.ones(q) if k == 0 else np.eye(q)[k - 1])
    return int(round(np.linalg.det(np.array(rows).reshape(q, q))))


def integrate_exact(form, vertices):
    """Exact integral of a Whitney form over the oriented simplex ``vertices``:
    the integral of mu_i d mu_J is c_J / (q + 1)!."""
    vertices = tuple(vertices)
    if len(vertices) != form.degree + 1:
        return Fraction(0)
    inside = set(vertices)
    first = form.support[0] if form.terms else None
    total = Fraction(0)
    for term in form.on(first):
        if term.mu not in inside or not set(term.dmu) <= inside:
            continue
        total += Fraction(term.coefficient * _chart_determinant(vertices, term.dmu), factorial(form.degree + 1))
    return total


def _integrate_chart(callback, simplex, q, tolerance):
    """Integral over the standard q-simplex of callback(simplex, barycentric point)."""
    if q == 0:
        return float(callback(simplex, np.array([1.0])))
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            if q == 1:
                value, error = quad(
                    lambda x: callback(simplex, np.array([1 - x, x])), 0, 1,
                    epsabs=1e-14, epsrel=tolerance,
                )
            elif q == 2:
                value, error = dblquad(
                    lambda y, x: callback(simplex, np.array([1 - x - y, x, y])),
                    0, 1, 0, lambda x: 1 - x, epsabs=1e-14, epsrel=tolerance,
                )
            else:
                raise ComplexError(f"de Rham map of degree {q} is not supported")
        except IntegrationWarning as exc:
            raise QuadratureError(f"Quadrature over {simplex} failed: {exc}") from exc
    if not np.isfinite(value) or error > 1e3 * tolerance * max(1.0, abs(value)):
        raise QuadratureError(f"Quadrature over {simplex} did not converge (error {error:.3e})")
    return float(value)


def derham_map(K, form, q=None, tolerance=1e-10):
    """R f(sigma) = integral of f over sigma, for every q-simplex.

    ``form`` is a WhitneyForm (integrated exactly) or a callable
    ``(simplex, barycentric point) -> coefficient`` of d mu_1 ^ .. ^ d mu_q in
    the chart of the simplex.
    """
    if isinstance(form, WhitneyForm):
        q = form.degree
        values = [float(integrate_exact(form, s.vertices)) for s in K.simplices(q)]
    else:
        if q is None or q < 0 or q > K.dim:
            raise ComplexError(f"de Rham map needs a degree in 0..{K.dim}")
        values = [_integrate_chart(form, s, q, tolerance) for s in K.simplices(q)]
    return Cochain(q, np.array(values).reshape(K.count(q), 1))


def line_form(density, coordinates):
    """Callback for density(x) dx (degree 1) or a function of x (degree 0) on a
    1-complex embedded by vertex ``coordinates``."""

    def callback(simplex, point):
        xs = [coordinates[v] for v in simplex.vertices]
        x = float(np.dot(point, xs))
        if simplex.dim == 0:
            return density(x)
        return density(x) * (xs[1] - xs[0])

    return callback


def whitney_gram(K, geometry, q=None):
    """L2 Gram of Whitney forms; the full WeightSystem, or its degree-q block."""
    if geometry.complex is not K:
        raise WeightError("Geometry belongs to a different complex")
    W = whitney_weights(K, geometry.lengths)
    return W if q is None else W.degree(q)


# Determinant ratios on the doubled interval


def interval_doubling(K):
    """For a path K: the glued circle K_f (end to end) and the closed double."""
    ends = [v for v in K.vertices if len(K.cofaces(0, K.vertex_position(v))) == 1]
    if len(ends) != 2:
        raise ComplexError("Interval doubling needs a path")
    first, last = ends
    L1 = K.boundary_subcomplex([first], name="L1")
    L2 = K.boundary_subcomplex([last], name="L2")
    K_f, projection = glue(K, GluingMap(L1, L2, {first: last}))
    doubling = closed_double(K, L1.union(L2, name="L"))
    return K_f, projection, doubling


def symbol_stencil(preset, h):
    """(local diagonal, local neighbour, Gram diagonal, Gram neighbour) of the
    circulant Laplacian on a uniform cycle. Exact for mpf ``h``."""
    diagonal, off, edge = interval_element(h)
    if preset == "whitney":
        return 2 * edge, -edge, 2 * diagonal, off
    if preset == "lumped":
        return 2 * edge, -edge, 2 * (diagonal + off), 0 * off
    raise WeightError(f"Unknown convergence preset {preset!r}")


def check_circulant(op, K, stencil, rtol=1e-10):
    """The float Laplacian on a cycle is the circulant with the given stencil."""
    order, _, _ = K.cycle_order()
    n = len(order)
    expected_local = np.zeros((n, n))
    expected_gram = np.zeros((n, n))
    a0, a1, q0, q1 = (float(c) for c in stencil)
    for p, v in enumerate(order):
        w = order[(p + 1) % n]
        expected_local[v, v] = a0
        expected_gram[v, v] = q0
        expected_local[v, w] = expected_local[w, v] = a1
        expected_gram[v, w] = expected_gram[w, v] = q1
    for actual, expected, what in ((op.local, expected_local, "local Laplacian"), (op.gram, expected_gram, "Gram")):
        scale = max(np.abs(expected).max(), 1e-300)
        if np.abs(actual - expected).max() > rtol * scale:
            raise WeightError(f"{what} on the {n}-cycle is not the expected circulant")


def log_det_prime_circulant(stencil, N):
    """sum over k = 1 .. N-1 of log of (a0 + 2 a1 cos t) / (q0 + 2 q1 cos t), t = 2 pi k / N."""
    a0, a1, q0, q1 = stencil
    return mp.fsum(
        mp.log((a0 + 2 * a1 * mp.cos(2 * mp.pi * k / N)) / (q0 + 2 * q1 * mp.cos(2 * mp.pi * k / N)))
        for k in range(1, N)
    )


def whitney_ratio_closed_form(length, n):
    """(length^2 / 4) (T_n(2) + s) / (T_n(2) - s) with s = (-1)^n."""
    s = 1 if n % 2 == 0 else -1
    t = mp.chebyt(n, 2)
    return mpf(length) ** 2 / 4 * (t + s) / (t - s)


def closed_form_ratio(preset, length, n):
    """Exact r(n) for the uniform refinement: the circulant closed form for
    Whitney weights, length^2 / 4 for lumped ones."""
    if preset == "whitney":
        return whitney_ratio_closed_form(length, n)
    return doubling_target(mpf(length))


def roundoff_floor(n, target):
    """Error below which a double-precision ratio on n edges carries no signal."""
    return ROUNDOFF_FACTOR * np.finfo(float).eps * n * max(1.0, abs(float(target)))


@dataclass(frozen=True)
class ConvergenceRow:
    preset: str
    length: float
    n: int
    h: float
    log_det_f: float
    log_det_double: float
    ratio: float
    target: float
    abs_error: float
    pipeline_ratio: float
    precision: str = "high"
    exact_error: object = field(default=None, repr=False, compare=False)


def _ratio_row(preset, length, level, precision):
    K = level.complex
    n = K.count(1)
    if n < 3:
        raise ComplexError("Determinant ratios need at least three edges")
    if precision not in ("high", "double"):
        raise ValueError(f"Unknown precision {precision!r}")
    K_f, _, doubling = interval_doubling(K)
    K_double = doubling.complex
    h_float = float(level.geometry.lengths[0])
    builder = WEIGHT_BUILDERS[preset]
    ops = []
    for cycle in (K_f, K_double):
        W = builder(PiecewiseFlatGeometry.uniform(cycle, h_float))
        op = laplacian(cycle, W)
        check_circulant(op, cycle, symbol_stencil(preset, h_float))
        ops.append(op)
    log_f = det_prime(ops[0]).log
    log_double = det_prime(ops[1]).log
    pipeline = float(np.exp(2 * log_f - log_double))

    if precision == "high":
        with mp.workdps(30 + n):
            h = mpf(length) / n
            stencil = symbol_stencil(preset, h)
            log_f = log_det_prime_circulant(stencil, n)
            log_double = log_det_prime_circulant(stencil, 2 * n)
            ratio = mp.exp(2 * log_f - log_double)
            target = doubling_target(mpf(length))
            error = abs(ratio - target)
            return ConvergenceRow(
                preset, float(length), n, float(h), float(log_f), float(log_double),
                float(ratio), float(target), float(error), pipeline, precision, error,
            )
    target = float(doubling_target(length))
    error = abs(pipeline - target)
    return ConvergenceRow(
        preset, float(length), n, h_float, log_f, log_double, pipeline, target, error, pipeline, precision, error,
    )


def determinant_ratio_experiment(length=1.0, n0=8, steps=6, preset="whitney", precision="high"):
    """r(n) = (det' Delta_{K_f})^2 / det' Delta_{K~} for n = n0, 2 n0, ...

    K is the path of n edges of length length / n, K_f the circle obtained by
    gluing its ends and K~ its closed double. With ``precision="high"`` the
    reported ratio comes from the circulant symbols of the assembled operators
    in mpmath; ``pipeline_ratio`` always holds the double-precision eigenvalue
    value of the same operators.
    """
    if n0 < 3:
        raise ComplexError("Determinant ratios need at least three edges")
    if preset not in WEIGHT_BUILDERS:
        raise WeightError(f"Unknown convergence preset {preset!r}")
    K = path_complex(n0)
    sequence = RefinementSequence.build(PiecewiseFlatGeometry.uniform(K, length / n0), steps, preset)
    rows = []
    for level in sequence:
        row = _ratio_row(preset, length, level, precision)
        logger.info("n=%d ratio=%.17g error=%.3e", row.n, row.ratio, row.abs_error)
        rows.append(row)
    return rows


def monotone_approach(rows):
    """Errors strictly decrease along the refinement.

    Double-precision rows whose error is under the roundoff floor only have to
    match the closed form to within that floor, and must come after every
    resolved row.
    """
    resolved, settled = [], []
    for row in rows:
        floor = roundoff_floor(row.n, row.target) if row.precision == "double" else 0.0
        if row.exact_error > floor:
            if settled:
                return False
            resolved.append(row)
        else:
            exact = float(closed_form_ratio(row.preset, row.length, row.n))
            if abs(row.ratio - exact) > floor:
                return False
            settled.append(row)
    return all(b.exact_error < a.exact_error for a, b in pairwise(resolved))


# Q-ratio on the collar


@dataclass(frozen=True)
class QRatioRow:
    n: int
    h: float
    ratio: float
    global_ratio: float
    collar_condition: bool


def _seam_gram_schur(Q, seam, interior):
    """det(Q_seam - A^t Q_interior^{-1} A) for the blocks of Q on seam + interior."""
    indices = list(interior) + list(seam)
    block = Q[np.ix_(indices, indices)]
    k = len(interior)
    Q_int, A, Q_seam = block_decompose(block, range(k), range(k, len(indices)))
    if k:
        Q_seam = Q_seam - A.T @ np.linalg.solve(Q_int, A)
    return float(np.linalg.det(Q_seam))


def _collar(K, seam, radius):
    distances = K.vertex_distances()
    near = np.min(distances[seam], axis=0)
    return [v for v in range(K.count(0)) if 0 < near[v] <= radius]


def _collar_is_product(K, seam, radius):
    """Every arc of the cycle between consecutive seam vertices holds at least
    2 radius + 1 vertices, so the collars are disjoint paths."""
    order, _, _ = K.cycle_order()
    spots = sorted(order.index(v) for v in seam)
    gaps = [(b - a) % len(order) - 1 for a, b in zip(spots, spots[1:] + spots[:1])]
    if len(spots) == 1:
        gaps = [len(order) - 1]
    return all(gap >= 2 * radius + 1 for gap in gaps)


def q_ratio_check(length=1.0, n=8, weights="whitney", radius=2):
    """det of the seam Schur complement of the Gram on the double over the
    square of the one on the glued circle, with the interior inverse taken on
    the collar (vertices within ``radius`` of the seam) and globally."""
    K = path_complex(n)
    K_f, projection, doubling = interval_doubling(K)
    K_double = doubling.complex
    h = length / n
    builder = WEIGHT_BUILDERS[weights] if weights in WEIGHT_BUILDERS else None
    if builder is None:
        raise WeightError(f"Unknown weight preset {weights!r}")
    seam_f = [projection.image(0, v)[0] for v in projection.gluing.target.positions(0)]
    seam_double = sorted({doubling.projection.image(0, v)[0] for v in doubling.projection.gluing.target.positions(0)})
    grams, seams = [], []
    for cycle, seam in ((K_f, seam_f), (K_double, seam_double)):
        W = builder(PiecewiseFlatGeometry.uniform(cycle, h))
        grams.append(gram(cycle, W).matrix)
        seams.append(seam)

    def ratio(interiors):
        glued = _seam_gram_schur(grams[0], seams[0], interiors[0])
        doubled = _seam_gram_schur(grams[1], seams[1], interiors[1])
        return doubled / glued ** 2

    collars = [_collar(K_f, seams[0], radius), _collar(K_double, seams[1], radius)]
    everything = [
        [v for v in range(K_f.count(0)) if v not in seams[0]],
        [v for v in range(K_double.count(0)) if v not in seams[1]],
    ]
    condition = _collar_is_product(K_f, seams[0], radius) and _collar_is_product(K_double, seams[1], radius)
    return QRatioRow(n, h, ratio(collars), ratio(everything), condition)
