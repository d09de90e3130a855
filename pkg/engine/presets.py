"""Complex families, weight and connection presets, and the gluing instances
used by the verification battery."""

import logging
import re
from dataclasses import dataclass, field

import numpy as np

from .bundle import (
    holonomy_twist_connection,
    pure_gauge_connection,
    random_gauges,
    trivial_connection,
)
from .exceptions import ComplexError, TransportError, WeightError
from .gaussian import glued_system
from .metric import diagonal_weights, lumped_weights_1d, whitney_weights
from .simplicial import (
    BoundarySubcomplex,
    GluingMap,
    build_complex,
    cycle_complex,
    disjoint_union,
    path_complex,
)

logger = logging.getLogger(__name__)

WEIGHT_PRESETS = ("diagonal-unit", "diagonal", "lumped", "whitney")
CONNECTION_MODES = ("trivial", "pure-gauge", "holonomy")


@dataclass(frozen=True, eq=False)
class ComplexSpec:
    """A complex with edge lengths and an optional marked boundary."""

    complex: object
    lengths: np.ndarray = field(repr=False)
    boundary: object = None
    descriptor: str = ""


def _lengths_from(K, table, default=1.0):
    return np.array([table.get(frozenset(e), default) for e in K.level(1)], dtype=float)


def grid_facets(rows, cols, periodic=False, label=None, dx=1.0, dy=1.0):
    """Triangulated grid of ``rows`` x ``cols`` vertices, each square cut by a
    diagonal. With ``periodic`` the columns wrap around (an annulus).

    Returns ``(facets, lengths)`` with lengths keyed by frozenset edges.
    """
    label = label or (lambda r, c: (r, c))
    width = cols if periodic else cols - 1
    facets, lengths = [], {}
    diagonal = float(np.hypot(dx, dy))
    for r in range(rows - 1):
        for c in range(width):
            c1 = (c + 1) % cols
            a, b = label(r, c), label(r, c1)
            d, e = label(r + 1, c), label(r + 1, c1)
            facets += [(a, b, d), (b, e, d)]
            lengths[frozenset((a, b))] = dx
            lengths[frozenset((d, e))] = dx
            lengths[frozenset((a, d))] = dy
            lengths[frozenset((b, e))] = dy
            lengths[frozenset((b, d))] = diagonal
    return facets, lengths


def _parse_size(text, what):
    match = re.fullmatch(r"(\d+)x(\d+)", text or "")
    if not match:
        raise ComplexError(f"{what} needs a size AxB, got {text!r}")
    return int(match.group(1)), int(match.group(2))


def spectrum_complex(name):
    """``cycle:N``, ``path:N``, ``triangle``, ``fan:K``, ``disk:AxB`` or ``annulus:AxB``."""
    family, _, arg = name.partition(":")
    try:
        if family == "cycle":
            K = cycle_complex(int(arg))
            return ComplexSpec(K, np.ones(K.count(1)), None, name)
        if family == "path":
            K = path_complex(int(arg))
            return ComplexSpec(K, np.ones(K.count(1)), K.topological_boundary(), name)
        if family == "triangle":
            K = build_complex([(0, 1, 2)])
            return ComplexSpec(K, np.ones(3), None, name)
        if family == "fan":
            k = int(arg)
            if k < 3:
                raise ComplexError("A fan needs at least three triangles")
            K = build_complex([("c", i, (i + 1) % k) for i in range(k)])
            return ComplexSpec(K, _wheel_lengths(K, k), K.topological_boundary(), name)
        if family in ("disk", "annulus"):
            rows, cols = _parse_size(arg, family)
            facets, table = grid_facets(rows, cols, periodic=family == "annulus")
            K = build_complex(facets)
            return ComplexSpec(K, _lengths_from(K, table), K.topological_boundary(), name)
    except ValueError as exc:
        if isinstance(exc, ComplexError):
            raise
        raise ComplexError(f"Bad complex preset {name!r}") from exc
    raise ComplexError(f"Unknown complex preset {name!r}")


def _wheel_lengths(K, k):
    """Rim of a regular k-gon inscribed in the unit circle; spokes of length 1."""
    rim = 2 * np.sin(np.pi / k)
    return np.array([1.0 if "c" in e else rim for e in K.level(1)])


# Weights


def make_weights(K, preset, lengths=None, rng=None, copies=()):
    """Weight system from a preset name.

    ``copies`` lists ``(q, source, target)`` positions whose random diagonal
    weight is copied, so gluings stay isometric.
    """
    if preset == "diagonal-unit":
        return diagonal_weights(K)
    if preset == "diagonal":
        rng = np.random.default_rng() if rng is None else rng
        values = [rng.uniform(0.5, 2.0, K.count(q)) for q in range(K.dim + 1)]
        for q, source, target in copies:
            values[q][source] = values[q][target]
        return diagonal_weights(K, values, label="diagonal")
    lengths = np.ones(K.count(1)) if lengths is None else lengths
    if preset == "lumped":
        return lumped_weights_1d(K, lengths)
    if preset == "whitney":
        return whitney_weights(K, lengths)
    raise WeightError(f"Unknown weight preset {preset!r}")


# Connections


_ANGLE = re.compile(r"([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\*?pi(?:/(\d+(?:\.\d*)?))?")


def parse_angle(text):
    """A float, or a multiple of pi such as ``pi``, ``-pi/2``, ``3pi/4``, ``2*pi/3``."""
    text = text.strip().replace(" ", "")
    match = _ANGLE.fullmatch(text)
    if match:
        factor, denominator = match.groups()
        if factor in ("", "+"):
            factor = 1.0
        elif factor == "-":
            factor = -1.0
        return float(factor) * np.pi / (float(denominator) if denominator else 1.0)
    try:
        return float(text)
    except ValueError:
        raise TransportError(f"Cannot parse angle {text!r}") from None


def parse_connection(spec):
    """``trivial``, ``pure-gauge`` or ``holonomy:<angle>`` -> (mode, angle)."""
    mode, _, arg = spec.partition(":")
    if mode not in CONNECTION_MODES:
        raise TransportError(f"Unknown connection {spec!r}")
    if mode == "holonomy":
        if not arg:
            raise TransportError("holonomy needs an angle, e.g. holonomy:pi")
        return mode, parse_angle(arg)
    if arg:
        raise TransportError(f"Connection {mode!r} takes no argument")
    return mode, None


def holonomy_matrix(theta, rank=1, field="real"):
    """e^{i theta} I for complex fibers; rotation blocks, and a trailing +-1
    following the sign of cos(theta), for real fibers."""
    if field == "complex":
        return np.exp(1j * theta) * np.eye(rank)
    U = np.zeros((rank, rank))
    c, s = np.cos(theta), np.sin(theta)
    for k in range(0, rank - 1, 2):
        U[k:k + 2, k:k + 2] = [[c, -s], [s, c]]
    if rank % 2:
        U[-1, -1] = 1.0 if c >= 0 else -1.0
    return U


def make_connection(K, spec="trivial", rank=1, field="real", rng=None):
    mode, theta = parse_connection(spec)
    if mode == "trivial":
        return trivial_connection(K, rank, field)
    if mode == "pure-gauge":
        rng = np.random.default_rng() if rng is None else rng
        return pure_gauge_connection(K, random_gauges(K, rank, field, rng), field)
    return holonomy_twist_connection(K, holonomy_matrix(theta, rank, field), field)


# Gluing instances


@dataclass(frozen=True, eq=False)
class GluingInstance:
    preset: str
    descriptor: str
    complex: object
    gluing: GluingMap
    rest: BoundarySubcomplex
    lengths: np.ndarray = field(repr=False)

    def copies(self):
        """``(q, source, target)`` for every simplex of the glued source."""
        return [
            (q, i, j)
            for q, mapping in enumerate(self.gluing.simplex_map)
            for i, (j, _) in mapping.items()
        ]


def _instance(preset, descriptor, K, source, target, vertex_map, rest, lengths):
    L1 = K.boundary_subcomplex(source, name="L1")
    L2 = K.boundary_subcomplex(target, name="L2")
    L3 = K.boundary_subcomplex(rest, name="L3")
    return GluingInstance(preset, descriptor, K, GluingMap(L1, L2, vertex_map), L3, lengths)


def _path_instance(preset, lengths):
    n = len(lengths)
    K = path_complex(n)
    return _instance(preset, f"path:{n}", K, [0], [n], {0: n}, [], np.asarray(lengths, dtype=float))


def _interval_seam(preset, left, right):
    """Two paths; the end of the first is glued to the start of the second and
    the outer ends keep Dirichlet data."""
    K = disjoint_union(path_complex(len(left)), path_complex(len(right)))
    lengths = np.concatenate([left, right])
    n, m = len(left), len(right)
    return _instance(
        preset, f"interval-seam:{n}+{m}", K, [(0, n)], [(1, 0)], {(0, n): (1, 0)},
        [(0, 0), (1, m)], lengths,
    )


def _two_triangles(preset):
    triangle = build_complex([(0, 1, 2)])
    K = disjoint_union(triangle, triangle)
    # edges 01, 02, 12 of a 3-4-5 right triangle, in both copies
    table = {}
    for c in (0, 1):
        table[frozenset(((c, 0), (c, 1)))] = 3.0
        table[frozenset(((c, 0), (c, 2)))] = 4.0
        table[frozenset(((c, 1), (c, 2)))] = 5.0
    return _instance(
        preset, "two-triangles", K, [(0, 1), (0, 2)], [(1, 1), (1, 2)],
        {(0, 1): (1, 1), (0, 2): (1, 2)}, [], _lengths_from(K, table),
    )


def _banded(K, table, rng, protected_rows, row_of):
    """Lengths with a 0.9..1.1 jitter on edges not lying in a protected band of rows."""
    lengths = _lengths_from(K, table)
    if rng is None:
        return lengths
    for e, (a, b) in enumerate(K.level(1)):
        rows = {row_of(a), row_of(b)}
        if any(rows <= band for band in protected_rows):
            continue
        lengths[e] *= rng.uniform(0.9, 1.1)
    return lengths


def _cylinder(preset, rows, cols, rng=None):
    """Periodic strip glued top row to bottom row into a torus."""
    if rows < 4 or cols < 3:
        raise ComplexError("cylinder needs at least 4 rows and 3 columns")
    facets, table = grid_facets(rows, cols, periodic=True)
    K = build_complex(facets)
    bands = [{0, 1}, {rows - 2, rows - 1}]
    lengths = _banded(K, table, rng, bands, lambda v: v[0])
    return _instance(
        preset, f"cylinder:{rows}x{cols}", K,
        [(0, c) for c in range(cols)], [(rows - 1, c) for c in range(cols)],
        {(0, c): (rows - 1, c) for c in range(cols)}, [], lengths,
    )


def _two_cylinders(preset, rows, cols, rng=None):
    """Two periodic strips; the last row of the first is glued to the first row
    of the second and the outer rows keep Dirichlet data."""
    if rows < 3 or cols < 3:
        raise ComplexError("two-cylinders needs at least 3 rows and 3 columns")
    facets, table = [], {}
    for copy in (0, 1):
        f, t = grid_facets(rows, cols, periodic=True, label=lambda r, c, copy=copy: (copy, r, c))
        facets += f
        table.update(t)
    K = build_complex(facets)
    bands = [{(0, rows - 2), (0, rows - 1)}, {(1, 0), (1, 1)}]
    lengths = _banded(K, table, rng, bands, lambda v: (v[0], v[1]))
    last = rows - 1
    return _instance(
        preset, f"two-cylinders:{rows}x{cols}", K,
        [(0, last, c) for c in range(cols)], [(1, 0, c) for c in range(cols)],
        {(0, last, c): (1, 0, c) for c in range(cols)},
        [(0, 0, c) for c in range(cols)] + [(1, last, c) for c in range(cols)], lengths,
    )


def _random_1d(preset, rng):
    if rng.random() < 0.5:
        lengths = rng.uniform(0.5, 2.0, int(rng.integers(4, 10)))
        lengths[-1] = lengths[0]
        return _path_instance(preset, lengths)
    left = rng.uniform(0.5, 2.0, int(rng.integers(2, 6)))
    right = rng.uniform(0.5, 2.0, int(rng.integers(2, 6)))
    right[0] = left[-1]
    return _interval_seam(preset, left, right)


def _random_2d(preset, rng):
    rows, cols = int(rng.integers(4, 7)), int(rng.integers(3, 6))
    if rng.random() < 0.5:
        return _cylinder(preset, rows, cols, rng)
    return _two_cylinders(preset, rows - 1, cols, rng)


@dataclass(frozen=True)
class GluingPreset:
    build: object
    weights: str = "whitney"
    connection: str = "trivial"
    masses: tuple = None
    rest_data: bool = True


GLUING_PRESETS = {
    "c4": GluingPreset(lambda p, rng: _path_instance(p, np.ones(4)), "diagonal-unit", "trivial", (0.0,)),
    "c4-massive": GluingPreset(lambda p, rng: _path_instance(p, np.ones(4)), "diagonal-unit", "trivial", (1.0,)),
    "c4-twisted": GluingPreset(lambda p, rng: _path_instance(p, np.ones(4)), "diagonal-unit", "holonomy:pi", (0.0,)),
    "interval-seam": GluingPreset(
        lambda p, rng: _interval_seam(p, np.ones(3), np.ones(3)), "whitney", "trivial", (1.0,),
    ),
    "two-triangles": GluingPreset(lambda p, rng: _two_triangles(p), "whitney", "trivial", (0.5,)),
    "cylinder": GluingPreset(lambda p, rng: _cylinder(p, 5, 4, rng)),
    "two-cylinders": GluingPreset(lambda p, rng: _two_cylinders(p, 4, 4, rng)),
    "random-1d": GluingPreset(_random_1d),
    "random-2d": GluingPreset(_random_2d, "whitney", "pure-gauge"),
}


def gluing_instance(preset, rng):
    try:
        spec = GLUING_PRESETS[preset]
    except KeyError:
        raise ComplexError(f"Unknown gluing preset {preset!r}") from None
    return spec.build(preset, rng)


def random_cochain(size, field, rng):
    values = rng.standard_normal(size)
    if field == "complex":
        values = values + 1j * rng.standard_normal(size)
    return values


def build_system(instance, weights, connection, rank, field, mass, rng):
    """GluedSystem for an instance; the connection is drawn on K_f."""
    if weights == "lumped" and instance.complex.dim != 1:
        raise WeightError("Lumped weights are defined on 1-complexes only")
    W = make_weights(instance.complex, weights, instance.lengths, rng, instance.copies())
    return glued_system(
        instance.complex,
        instance.gluing,
        W,
        lambda K_f: make_connection(K_f, connection, rank, field, rng),
        instance.rest,
        mass,
    )
