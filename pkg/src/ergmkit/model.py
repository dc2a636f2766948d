"""Model specifications: the curved map from parameters to natural parameters.

A :class:`ModelSpec` is a model instantiated for one node count ``n``.  It
holds the ordered natural statistics (``terms``) and a parameter map whose
entries are :class:`Linear` (one parameter drives one natural coordinate),
:class:`GwespCurved` (base/decay/optional shifts drive the shared-partner
family ``Esp(1) .. Esp(n-2)``) or :class:`FixedOffset` (weight fixed at 1).

:class:`ModelTemplate` is the size-independent declaration; it is what the
config parser produces and what pooled fitting instantiates per network.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .graph import BlockStructure, Graph, NodeAttributes
from .terms import (DegreeCount, DyadCovariate, Edges, Esp, NodeDegree, NodeMatch, Offset,
                    TermKind, Triangles, TwoPaths, is_dyad_independent, stat_vector,
                    stat_vector_adjacency, validate_term)

LOG2 = math.log(2.0)


class DegeneracyWarning(UserWarning):
    """Decay parameter in a regime associated with near-degeneracy."""


class IdentifiabilityWarning(UserWarning):
    """Parameter value at which some parameter drops out of the likelihood."""


# -- parameter map entries ---------------------------------------------------

@dataclass(frozen=True)
class Linear:
    theta: int
    coord: int


@dataclass(frozen=True)
class GwespCurved:
    base: int
    decay: int
    coords: tuple[int, ...]  # natural coordinate of Esp(m) at position m-1
    shift1: int | None = None
    shift2: int | None = None

    @property
    def thetas(self) -> tuple[int, ...]:
        return tuple(t for t in (self.base, self.decay, self.shift1, self.shift2) if t is not None)


@dataclass(frozen=True)
class FixedOffset:
    coord: int


MapEntry = Linear | GwespCurved | FixedOffset


# -- GWESP algebra -----------------------------------------------------------

def gwesp_eta(theta_base: float, theta_decay: float, m) -> np.ndarray:
    """Natural parameters ``base * e^decay * (1 - (1 - e^-decay)^m)``."""
    m = np.asarray(m)
    r = -math.expm1(-theta_decay)
    return theta_base * math.exp(theta_decay) * (1.0 - np.power(r, m))


def gwesp_added_value(theta_base: float, theta_decay: float, m: int) -> float:
    """Log-odds gained by the ``m``-th shared partner of a connected pair."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return theta_base * (-math.expm1(-theta_decay)) ** (m - 1)


def _gwesp_grad(theta_base: float, theta_decay: float, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = -math.expm1(-theta_decay)
    e = math.exp(theta_decay)
    rm = np.power(r, m)
    d_base = e * (1.0 - rm)
    d_decay = theta_base * (e * (1.0 - rm) - m * np.power(r, m - 1))
    return d_base, d_decay


# -- ModelSpec ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ModelSpec:
    n: int
    terms: tuple[TermKind, ...]
    param_map: tuple[MapEntry, ...]
    param_names: tuple[str, ...]
    attributes: NodeAttributes | None = None
    blocks: BlockStructure | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "param_map", tuple(self.param_map))
        object.__setattr__(self, "param_names", tuple(self.param_names))
        q, p = len(self.terms), len(self.param_names)
        owner = [0] * q
        used = set()
        for e in self.param_map:
            coords = e.coords if isinstance(e, GwespCurved) else (e.coord,)
            for c in coords:
                if not 0 <= c < q:
                    raise ValueError(f"map entry {e} refers to missing coordinate {c}")
                owner[c] += 1
            if isinstance(e, Linear):
                used.add(e.theta)
            elif isinstance(e, GwespCurved):
                used.update(e.thetas)
                if len(set(e.thetas)) != len(e.thetas):
                    raise ValueError("GWESP entry reuses a parameter index")
                ms = [self.terms[c].m if isinstance(self.terms[c], Esp) else None for c in e.coords]
                if ms != list(range(1, len(ms) + 1)):
                    raise ValueError("GWESP coordinates must be Esp(1), Esp(2), ... in order")
                if len(ms) != max(self.n - 2, 0):
                    raise ValueError(f"GWESP must cover m = 1..{self.n - 2}")
        for c, k in enumerate(owner):
            if k != 1:
                raise ValueError(f"natural coordinate {c} ({self.terms[c].name}) mapped {k} times")
        if used != set(range(p)):
            missing = sorted(set(range(p)) - used)
            raise ValueError(f"parameter indices {missing} are not used by any map entry")
        lin = [e.theta for e in self.param_map if isinstance(e, Linear)]
        if len(lin) != len(set(lin)):
            raise ValueError("a parameter index is mapped by two linear entries")
        for t in self.terms:
            validate_term(t, self.n, self.attributes)
        if self.blocks is not None and self.blocks.n != self.n:
            raise ValueError("block structure does not match node count")

    # -- constructors --------------------------------------------------
    @classmethod
    def linear(cls, n: int, terms: Sequence[TermKind], attributes: NodeAttributes | None = None,
               blocks: BlockStructure | None = None) -> "ModelSpec":
        """Canonical model: one parameter per non-offset term, offsets fixed."""
        entries, names, p = [], [], 0
        for c, t in enumerate(terms):
            if isinstance(t, Offset):
                entries.append(FixedOffset(c))
            else:
                entries.append(Linear(p, c))
                names.append(t.name)
                p += 1
        return cls(n, tuple(terms), tuple(entries), tuple(names), attributes, blocks)

    @classmethod
    def with_gwesp(cls, n: int, linear_terms: Sequence[TermKind] = (Edges(),), shifted: bool = False,
                   attributes: NodeAttributes | None = None,
                   blocks: BlockStructure | None = None) -> "ModelSpec":
        """Linear terms followed by a (shifted) GWESP block.

        Parameter order: linear terms, then ``shift1, shift2`` if shifted,
        then ``base, decay``.
        """
        base = cls.linear(n, linear_terms, attributes)
        terms = list(base.terms)
        entries = list(base.param_map)
        names = list(base.param_names)
        p = len(names)
        shift1 = shift2 = None
        if shifted:
            shift1, shift2 = p, p + 1
            names += ["gwesp.shift1", "gwesp.shift2"]
            p += 2
        names += ["gwesp.base", "gwesp.decay"]
        coords = tuple(range(len(terms), len(terms) + n - 2))
        terms += [Esp(m) for m in range(1, n - 1)]
        entries.append(GwespCurved(p, p + 1, coords, shift1, shift2))
        return cls(n, tuple(terms), tuple(entries), tuple(names), attributes, blocks)

    # -- shape ---------------------------------------------------------
    @property
    def p(self) -> int:
        return len(self.param_names)

    @property
    def q(self) -> int:
        return len(self.terms)

    @cached_property
    def is_curved(self) -> bool:
        return any(isinstance(e, GwespCurved) for e in self.param_map)

    @cached_property
    def dyad_independent(self) -> bool:
        return is_dyad_independent(self.terms)

    @cached_property
    def offset_coords(self) -> np.ndarray:
        return np.array([e.coord for e in self.param_map if isinstance(e, FixedOffset)], dtype=np.int64)

    @cached_property
    def free_mask(self) -> np.ndarray:
        """Boolean ``n x n`` matrix of dyads that are random under the model."""
        if self.blocks is not None:
            return self.blocks.within_mask()
        m = np.ones((self.n, self.n), dtype=bool)
        np.fill_diagonal(m, False)
        return m

    @cached_property
    def free_dyads(self) -> np.ndarray:
        iu, ju = np.nonzero(np.triu(self.free_mask, 1))
        return np.stack([iu, ju], axis=1).astype(np.int64)

    @property
    def term_names(self) -> list[str]:
        return [t.name for t in self.terms]

    def with_blocks(self, blocks: BlockStructure | None) -> "ModelSpec":
        return ModelSpec(self.n, self.terms, self.param_map, self.param_names, self.attributes, blocks)

    # -- parameter map -------------------------------------------------
    def _check_theta(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64).reshape(-1)
        if theta.shape[0] != self.p:
            raise ValueError(f"theta has length {theta.shape[0]}, model has p={self.p}")
        return theta

    def eta(self, theta) -> np.ndarray:
        theta = self._check_theta(theta)
        out = np.empty(self.q)
        for e in self.param_map:
            if isinstance(e, Linear):
                out[e.coord] = theta[e.theta]
            elif isinstance(e, FixedOffset):
                out[e.coord] = 1.0
            else:
                ms = np.arange(1, len(e.coords) + 1)
                vals = gwesp_eta(theta[e.base], theta[e.decay], ms)
                if e.shift1 is not None and len(vals) >= 1:
                    vals[0] += theta[e.shift1]
                if e.shift2 is not None and len(vals) >= 2:
                    vals[1] += theta[e.shift2]
                out[list(e.coords)] = vals
        return out

    def eta_jacobian(self, theta) -> np.ndarray:
        """Analytic ``q x p`` matrix of partial derivatives of ``eta``."""
        theta = self._check_theta(theta)
        jac = np.zeros((self.q, self.p))
        for e in self.param_map:
            if isinstance(e, Linear):
                jac[e.coord, e.theta] = 1.0
            elif isinstance(e, GwespCurved):
                ms = np.arange(1, len(e.coords) + 1)
                d_base, d_decay = _gwesp_grad(theta[e.base], theta[e.decay], ms)
                coords = list(e.coords)
                jac[coords, e.base] = d_base
                jac[coords, e.decay] = d_decay
                if e.shift1 is not None and coords:
                    jac[coords[0], e.shift1] = 1.0
                if e.shift2 is not None and len(coords) >= 2:
                    jac[coords[1], e.shift2] = 1.0
        return jac

    def eta_hessian(self, theta) -> np.ndarray:
        """Second derivatives of ``eta`` as a ``q x p x p`` array (zero for linear rows)."""
        theta = self._check_theta(theta)
        hess = np.zeros((self.q, self.p, self.p))
        for e in self.param_map:
            if not isinstance(e, GwespCurved) or not e.coords:
                continue
            b, dec = theta[e.base], theta[e.decay]
            ms = np.arange(1, len(e.coords) + 1, dtype=np.float64)
            r = -math.expm1(-dec)
            d_base, _ = _gwesp_grad(1.0, dec, ms)
            f1 = d_base - ms * np.power(r, ms - 1)
            with np.errstate(divide="ignore", invalid="ignore"):
                curv = np.where(ms >= 2, ms * (ms - 1) * np.power(r, ms - 2) * (1.0 - r), 0.0)
            f2 = f1 - curv
            coords = list(e.coords)
            hess[coords, e.base, e.decay] = f1
            hess[coords, e.decay, e.base] = f1
            hess[coords, e.decay, e.decay] = b * f2
        return hess

    # -- statistics ----------------------------------------------------
    def restrict(self, g: Graph) -> Graph:
        """Drop edges on dyads outside the model (between blocks)."""
        if self.blocks is None:
            return g
        h = Graph(g.n)
        for i, j in g.edges():
            if self.blocks.same_block(i, j):
                h._add(i, j)
        return h

    def stats(self, g: Graph) -> np.ndarray:
        if g.n != self.n:
            raise ValueError(f"graph has {g.n} nodes, model expects {self.n}")
        return stat_vector_adjacency(self.terms, self.restrict(g).adjacency(), self.attributes)

    def stats_reference(self, g: Graph) -> np.ndarray:
        """Slow pure-Python recount, kept as an independent check of :meth:`stats`."""
        if g.n != self.n:
            raise ValueError(f"graph has {g.n} nodes, model expects {self.n}")
        return stat_vector(self.terms, self.restrict(g), self.attributes)

    def log_weight(self, theta, g: Graph) -> float:
        return float(self.eta(theta) @ self.stats(g))


def eta(spec: ModelSpec, theta) -> np.ndarray:
    return spec.eta(theta)


def eta_jacobian(spec: ModelSpec, theta) -> np.ndarray:
    return spec.eta_jacobian(theta)


def log_weight(spec: ModelSpec, theta, g: Graph, a: NodeAttributes | None = None) -> float:
    """``<eta(theta), s(g)>``: the log-density up to the log-normalizer."""
    if a is not None and spec.attributes is None and any(isinstance(t, NodeMatch) for t in spec.terms):
        spec = ModelSpec(spec.n, spec.terms, spec.param_map, spec.param_names, a, spec.blocks)
    return spec.log_weight(theta, g)


def check_theta(spec: ModelSpec, theta, strict: bool = False) -> None:
    """Warn about GWESP parameter values with identifiability or degeneracy issues.

    With ``strict=True`` a zero base parameter raises instead of warning.
    """
    theta = spec._check_theta(theta)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta has non-finite entries")
    for e in spec.param_map:
        if not isinstance(e, GwespCurved):
            continue
        base, decay = theta[e.base], theta[e.decay]
        if base == 0.0:
            msg = (f"{spec.param_names[e.base]} = 0 removes the GWESP term; "
                   f"{spec.param_names[e.decay]} is not identifiable")
            if strict:
                raise ValueError(msg)
            warnings.warn(msg, IdentifiabilityWarning, stacklevel=2)
        if decay < -LOG2:
            warnings.warn(f"{spec.param_names[e.decay]} = {decay:.4g} < -log 2: "
                          "near-degenerate regime for large graphs", DegeneracyWarning, stacklevel=2)
        elif decay < 0:
            warnings.warn(f"{spec.param_names[e.decay]} = {decay:.4g} < 0: added value of shared "
                          "partners alternates in sign", DegeneracyWarning, stacklevel=2)


# -- templates -----------------------------------------------------------------

@dataclass(frozen=True)
class TermDecl:
    """A linear term declaration; ``theta`` is a 0-based parameter index."""

    kind: str
    theta: int
    args: tuple[tuple[str, object], ...] = ()

    def arg(self, key: str, default=None):
        return dict(self.args).get(key, default)


@dataclass(frozen=True)
class GwespDecl:
    base: int
    decay: int
    shift1: int | None = None
    shift2: int | None = None


@dataclass(frozen=True)
class OffsetDecl:
    kind: str = "sparse"


Decl = TermDecl | GwespDecl | OffsetDecl

LINEAR_KINDS = ("edges", "degree", "twopaths", "triangles", "esp", "nodedegree", "nodematch", "distance")


def _distance_matrix(a: NodeAttributes, attrs: Sequence[str], transform: str) -> np.ndarray:
    pos = np.column_stack([np.asarray(a[name], dtype=np.float64) for name in attrs])
    d = np.sqrt(((pos[:, None, :] - pos[None, :, :]) ** 2).sum(-1))
    if transform == "identity":
        return d
    if transform == "log":
        with np.errstate(divide="ignore"):
            out = np.log(d)
        np.fill_diagonal(out, 0.0)
        return out
    raise ValueError(f"unknown distance transform {transform!r}")


def _make_term(decl: TermDecl, n: int, a: NodeAttributes | None) -> TermKind:
    k = decl.kind
    if k == "edges":
        return Edges()
    if k == "degree":
        return DegreeCount(int(decl.arg("k")))
    if k == "twopaths":
        return TwoPaths()
    if k == "triangles":
        return Triangles()
    if k == "esp":
        return Esp(int(decl.arg("m")))
    if k == "nodedegree":
        return NodeDegree(int(decl.arg("i")))
    if k == "nodematch":
        return NodeMatch(str(decl.arg("attr")))
    if k == "distance":
        if a is None:
            raise KeyError("distance term needs node attributes")
        attrs = tuple(decl.arg("attrs"))
        transform = decl.arg("transform", "identity")
        label = "+".join(attrs) + ("" if transform == "identity" else f".{transform}")
        return DyadCovariate(label, _distance_matrix(a, attrs, transform))
    raise ValueError(f"unknown term kind {k!r}")


@dataclass(frozen=True)
class ModelTemplate:
    """Size-independent model declaration, instantiated per network."""

    decls: tuple[Decl, ...]
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "decls", tuple(self.decls))
        idx: list[int] = []
        natural: list[object] = []
        for d in self.decls:
            if isinstance(d, TermDecl):
                if d.kind not in LINEAR_KINDS:
                    raise ValueError(f"unknown term kind {d.kind!r}")
                idx.append(d.theta)
                natural.append((d.kind, d.args))
            elif isinstance(d, GwespDecl):
                ids = [t for t in (d.base, d.decay, d.shift1, d.shift2) if t is not None]
                if len(set(ids)) != len(ids):
                    raise ValueError("gwesp declaration reuses a parameter index")
                idx.extend(ids)
                natural.append("gwesp")
            else:
                if d.kind != "sparse":
                    raise ValueError(f"unknown offset kind {d.kind!r}")
                natural.append(("offset", d.kind))
        if len(natural) != len(set(map(repr, natural))):
            raise ValueError("two declarations map to the same natural statistic")
        esp_ms = {dict(d.args).get("m") for d in self.decls if isinstance(d, TermDecl) and d.kind == "esp"}
        if esp_ms and "gwesp" in natural:
            raise ValueError(f"esp terms {sorted(esp_ms)} collide with the gwesp family")
        if len(idx) != len(set(idx)):
            raise ValueError("a parameter index is mapped twice")
        if set(idx) != set(range(len(idx))):
            raise ValueError(f"parameter indices must be exactly 1..{len(idx)} (1-based); got "
                             f"{sorted(i + 1 for i in idx)}")
        if not self.names:
            object.__setattr__(self, "names", tuple(self._default_names(len(idx))))

    def _default_names(self, p: int) -> list[str]:
        names = [""] * p
        for d in self.decls:
            if isinstance(d, TermDecl):
                t = _make_term(d, 3, None) if d.kind not in ("distance", "nodedegree") else None
                if d.kind == "nodedegree":
                    names[d.theta] = f"nodedegree{int(d.arg('i')) + 1}"
                elif d.kind == "distance":
                    names[d.theta] = "distance." + "+".join(d.arg("attrs"))
                elif d.kind == "nodematch":
                    names[d.theta] = f"nodematch.{d.arg('attr')}"
                else:
                    names[d.theta] = t.name
            elif isinstance(d, GwespDecl):
                names[d.base] = "gwesp.base"
                names[d.decay] = "gwesp.decay"
                if d.shift1 is not None:
                    names[d.shift1] = "gwesp.shift1"
                if d.shift2 is not None:
                    names[d.shift2] = "gwesp.shift2"
        return names

    @property
    def p(self) -> int:
        return len(self.names)

    def instantiate(self, n: int, attributes: NodeAttributes | None = None,
                    blocks: BlockStructure | None = None) -> ModelSpec:
        terms: list[TermKind] = []
        entries: list[MapEntry] = []
        for d in self.decls:
            if isinstance(d, TermDecl):
                entries.append(Linear(d.theta, len(terms)))
                terms.append(_make_term(d, n, attributes))
            elif isinstance(d, GwespDecl):
                coords = tuple(range(len(terms), len(terms) + max(n - 2, 0)))
                terms.extend(Esp(m) for m in range(1, n - 1))
                entries.append(GwespCurved(d.base, d.decay, coords, d.shift1, d.shift2))
            else:
                entries.append(FixedOffset(len(terms)))
                terms.append(Offset.sparse(n))
        return ModelSpec(n, tuple(terms), tuple(entries), self.names, attributes, blocks)


def template(*decls: Decl, names: Sequence[str] = ()) -> ModelTemplate:
    return ModelTemplate(tuple(decls), tuple(names))


# -- presets -------------------------------------------------------------------

def edges_template() -> ModelTemplate:
    return template(TermDecl("edges", 0))


def sparse_bernoulli_template() -> ModelTemplate:
    return template(TermDecl("edges", 0), OffsetDecl("sparse"))


def triangle_template() -> ModelTemplate:
    return template(TermDecl("edges", 0), TermDecl("triangles", 1))


def gwesp_template() -> ModelTemplate:
    """Edges plus unshifted GWESP: ``(edges, gwesp.base, gwesp.decay)``."""
    return template(TermDecl("edges", 0), GwespDecl(base=1, decay=2))


def brain13_template() -> ModelTemplate:
    """Thirteen-parameter curved model for the brain networks.

    ``theta[0]`` edges, ``theta[1:8]`` number of nodes of degree 0..6,
    ``theta[8]`` two-paths, ``theta[9:11]`` GWESP shifts on ``Esp(1)`` and
    ``Esp(2)``, ``theta[11]`` GWESP base, ``theta[12]`` GWESP decay.
    """
    decls: list[Decl] = [TermDecl("edges", 0)]
    decls += [TermDecl("degree", 1 + k, (("k", k),)) for k in range(7)]
    decls.append(TermDecl("twopaths", 8))
    decls.append(GwespDecl(base=11, decay=12, shift1=9, shift2=10))
    return ModelTemplate(tuple(decls))


PRESETS = {
    "edges": edges_template,
    "sparse-bernoulli": sparse_bernoulli_template,
    "triangles": triangle_template,
    "gwesp": gwesp_template,
    "brain13": brain13_template,
}

# Reference values for the brain model used by recovery studies; the degree
# parameters have no reference value and are set to zero.
BRAIN13_THETA = np.array([-4.972, 0, 0, 0, 0, 0, 0, 0, -0.091, 0.198, 0.305, 1.061, 1.565])
BRAIN13_SE = np.array([0.560, np.nan, np.nan, np.nan, np.nan, np.nan, np.nan, np.nan,
                        0.033, 0.024, 0.022, 0.018, 0.028])
