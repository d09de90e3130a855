"""Reader for the line-oriented complex description format.

    facet v0 v1 [v2]            top simplex, vertex order is the orientation
    boundary NAME v v ...       boundary subcomplex spanned by the vertices
    glue SRC TGT a:b a:b ...    gluing map between two named boundaries
    rest NAME                   boundary kept as Dirichlet data when gluing
    length a b VALUE            edge length (default 1)
    weights PRESET [k=v ...]    diagonal-unit | diagonal | lumped | whitney
    weight a,b c,d VALUE        explicit weight of a pair of same-degree simplices
    connection SPEC             trivial | pure-gauge | holonomy:<angle>
    transport t0,t1 s0 ENTRIES  A(tau, sigma), row-major, complex entries allowed
    rank N
    field real|complex

``#`` starts a comment. Vertex ids that parse as integers become ints.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .exceptions import ComplexError, DescriptionError, TransportError, WeightError
from .metric import diagonal_weights
from .presets import WEIGHT_PRESETS, GluingInstance, make_connection, make_weights, parse_connection
from .simplicial import GluingMap, build_complex

logger = logging.getLogger(__name__)


def vertex_id(token):
    try:
        return int(token)
    except ValueError:
        return token


def _simplex(token):
    return tuple(vertex_id(v) for v in token.split(","))


def _number(token, line, kind=float):
    try:
        return kind(token)
    except ValueError:
        raise DescriptionError(f"Expected a number, got {token!r}", line) from None


@dataclass
class Description:
    facets: list = field(default_factory=list)
    boundaries: dict = field(default_factory=dict)
    glue: tuple = None
    rest: list = field(default_factory=list)
    lengths: dict = field(default_factory=dict)
    weights: str = "diagonal-unit"
    weight_params: dict = field(default_factory=dict)
    weight_entries: list = field(default_factory=list)
    connection: str = "trivial"
    transports: list = field(default_factory=list)
    rank: int = 1
    field: str = "real"
    source: str = "<description>"

    @cached_property
    def complex(self):
        if not self.facets:
            raise DescriptionError("No facet lines")
        return build_complex(self.facets)

    def boundary(self, name):
        try:
            vertices = self.boundaries[name]
        except KeyError:
            raise DescriptionError(f"Unknown boundary {name!r}") from None
        return self.complex.boundary_subcomplex(vertices, name=name)

    def marked_boundary(self):
        """Union of every declared boundary, or None."""
        if not self.boundaries:
            return None
        parts = [self.boundary(name) for name in self.boundaries]
        return parts[0].union(*parts[1:], name="L")

    def edge_lengths(self):
        K = self.complex
        for key in self.lengths:
            if K.find(key) is None or len(key) != 2:
                raise DescriptionError(f"length given for {sorted(map(str, key))}, which is not an edge")
        return np.array([self.lengths.get(frozenset(e), 1.0) for e in K.level(1)])

    def weight_system(self, rng=None, copies=()):
        K = self.complex
        if self.weights == "diagonal" and self.weight_params:
            values = [np.full(K.count(q), float(self.weight_params.get(f"q{q}", 1.0))) for q in range(K.dim + 1)]
            W = diagonal_weights(K, values, label="diagonal")
        else:
            W = make_weights(K, self.weights, self.edge_lengths(), rng, copies)
        if self.weight_entries:
            entries = {}
            for a, b, value in self.weight_entries:
                qa, i = K.index(a)
                qb, j = K.index(b)
                if qa != qb:
                    raise WeightError(f"Weight pair {a}, {b} mixes degrees {qa} and {qb}")
                entries[(qa, i, j)] = value
            W = W.with_entries(entries, label=f"{W.label}+explicit")
        return W

    def connection_on(self, K, rng=None):
        """Connection from the preset, then explicit transports looked up by
        vertex labels in ``K``."""
        A = make_connection(K, self.connection, self.rank, self.field, rng)
        if not self.transports:
            return A
        overrides = {}
        for tau, sigma, entries, line in self.transports:
            try:
                upper, lower = K.index(tau), K.index(sigma)
            except ComplexError as exc:
                raise DescriptionError(str(exc), line) from None
            if len(entries) != self.rank ** 2:
                raise DescriptionError(f"transport needs {self.rank ** 2} entries", line)
            overrides[(upper, lower)] = np.array(entries).reshape(self.rank, self.rank)
        return A.replaced(overrides)

    def gluing_instance(self):
        if self.glue is None:
            raise DescriptionError("No glue line")
        source, target, mapping = self.glue
        L1, L2 = self.boundary(source), self.boundary(target)
        rest = [self.boundary(name) for name in self.rest]
        K = self.complex
        L3 = rest[0].union(*rest[1:], name="L3") if rest else K.boundary_subcomplex([], name="L3")
        return GluingInstance("file", Path(self.source).name, K, GluingMap(L1, L2, mapping), L3, self.edge_lengths())


def parse_description(text, source="<description>"):
    desc = Description(source=source)
    for number, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        keyword, args = tokens[0], tokens[1:]
        if keyword == "facet":
            if not 1 <= len(args) <= 3:
                raise DescriptionError("facet takes one to three vertices", number)
            desc.facets.append(tuple(vertex_id(v) for v in args))
        elif keyword == "boundary":
            if len(args) < 2:
                raise DescriptionError("boundary needs a name and at least one vertex", number)
            desc.boundaries[args[0]] = [vertex_id(v) for v in args[1:]]
        elif keyword == "glue":
            if len(args) < 3:
                raise DescriptionError("glue needs SRC TGT and at least one a:b pair", number)
            mapping = {}
            for pair in args[2:]:
                a, sep, b = pair.partition(":")
                if not sep or not a or not b:
                    raise DescriptionError(f"Bad vertex pair {pair!r}", number)
                mapping[vertex_id(a)] = vertex_id(b)
            desc.glue = (args[0], args[1], mapping)
        elif keyword == "rest":
            if len(args) != 1:
                raise DescriptionError("rest takes one boundary name", number)
            desc.rest.append(args[0])
        elif keyword == "length":
            if len(args) != 3:
                raise DescriptionError("length takes two vertices and a value", number)
            desc.lengths[frozenset((vertex_id(args[0]), vertex_id(args[1])))] = _number(args[2], number)
        elif keyword == "weights":
            if not args or args[0] not in WEIGHT_PRESETS:
                raise DescriptionError(f"weights needs one of {', '.join(WEIGHT_PRESETS)}", number)
            desc.weights = args[0]
            for item in args[1:]:
                key, sep, value = item.partition("=")
                if not sep:
                    raise DescriptionError(f"Bad weight parameter {item!r}", number)
                desc.weight_params[key] = _number(value, number)
        elif keyword == "weight":
            if len(args) != 3:
                raise DescriptionError("weight takes two simplices and a value", number)
            desc.weight_entries.append((_simplex(args[0]), _simplex(args[1]), _number(args[2], number)))
        elif keyword == "connection":
            if len(args) != 1:
                raise DescriptionError("connection takes one spec", number)
            try:
                parse_connection(args[0])
            except TransportError as exc:
                raise DescriptionError(str(exc), number) from None
            desc.connection = args[0]
        elif keyword == "transport":
            if len(args) < 3:
                raise DescriptionError("transport needs tau, sigma and the matrix entries", number)
            entries = [_number(v, number, complex) for v in args[2:]]
            if all(e.imag == 0 for e in entries):
                entries = [e.real for e in entries]
            desc.transports.append((_simplex(args[0]), _simplex(args[1]), entries, number))
        elif keyword == "rank":
            if len(args) != 1:
                raise DescriptionError("rank takes one integer", number)
            desc.rank = _number(args[0], number, int)
            if desc.rank < 1:
                raise DescriptionError("rank must be positive", number)
        elif keyword == "field":
            if args not in (["real"], ["complex"]):
                raise DescriptionError("field is real or complex", number)
            desc.field = args[0]
        else:
            raise DescriptionError(f"Unknown directive {keyword!r}", number)
    if not desc.facets:
        raise DescriptionError("No facet lines")
    for name in desc.rest:
        if name not in desc.boundaries:
            raise DescriptionError(f"rest names unknown boundary {name!r}")
    if desc.glue is not None:
        for name in desc.glue[:2]:
            if name not in desc.boundaries:
                raise DescriptionError(f"glue names unknown boundary {name!r}")
    logger.debug("Parsed %s: %d facets, %d boundaries", source, len(desc.facets), len(desc.boundaries))
    return desc


def load_description(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DescriptionError(f"Cannot read {path}: {exc}") from None
    return parse_description(text, source=str(path))
