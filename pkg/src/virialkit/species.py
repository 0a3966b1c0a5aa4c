"""Finite species spaces, measures on them, pair potentials, and Mayer matrices.

A species space is a finite set {0, ..., S-1} with a positive quadrature
weight per species; integrals over the underlying continuum are modelled as
weighted sums.  Pair interactions live on the space as a symmetric matrix of
energies with +inf allowed for hard cores.  The Mayer matrices

    f(x, y)    = exp(-beta * v(x, y)) - 1
    fbar(x, y) = 1 - exp(-beta * |v(x, y)|)

are the basic building blocks for every cluster coefficient downstream.
Hard-core entries keep v = +inf as a genuine float infinity so that f = -1
and fbar = 1 hold exactly, also in rational mode.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement

from .errors import DomainError, StructureError

INF = math.inf


def is_inf(x):
    return isinstance(x, float) and math.isinf(x)


def _check_square_symmetric(m, size, what):
    if len(m) != size or any(len(row) != size for row in m):
        raise StructureError(f"{what} must be a {size}x{size} matrix")
    for i in range(size):
        for j in range(i, size):
            if m[i][j] != m[j][i]:
                raise StructureError(f"{what} must be symmetric (entries {i},{j} differ)")


@dataclass(frozen=True)
class Species:
    """One species: integer id, positive quadrature weight, optional payload.

    The payload carries geometric data when the species discretize a continuum
    (position vector, radius, orientation angle, ...); the core machinery never
    looks inside it.
    """

    id: int
    weight: object
    payload: dict | None = None


class SpeciesSpace:
    """Finite species set with quadrature weights.

    Weights may be floats or Fractions; they must be positive.  Species ids
    are consecutive 0..S-1.
    """

    def __init__(self, species):
        species = tuple(species)
        if not species:
            raise StructureError("species space must be non-empty")
        for k, sp in enumerate(species):
            if sp.id != k:
                raise StructureError("species ids must be consecutive 0..S-1")
            if not sp.weight > 0:
                raise StructureError(f"species {k} has non-positive weight {sp.weight}")
        self.species = species
        self.weights = tuple(sp.weight for sp in species)

    @classmethod
    def from_weights(cls, weights, payloads=None):
        if payloads is None:
            payloads = [None] * len(weights)
        return cls(Species(i, w, p) for i, (w, p) in enumerate(zip(weights, payloads)))

    @classmethod
    def uniform(cls, size, weight=1):
        return cls.from_weights([weight] * size)

    @property
    def size(self):
        return len(self.species)

    def payload(self, x):
        return self.species[x].payload

    def __len__(self):
        return len(self.species)

    def __eq__(self, other):
        return isinstance(other, SpeciesSpace) and self.weights == other.weights

    def __repr__(self):
        return f"SpeciesSpace(S={self.size})"


class MeasureVec:
    """A (possibly signed or complex) measure: one density value per species.

    The value at species x is the density relative to the quadrature weight,
    so the total mass of the measure is sum_x value[x] * weight[x].
    """

    def __init__(self, space, values):
        values = tuple(values)
        if len(values) != space.size:
            raise StructureError("measure length must match species count")
        self.space = space
        self.values = values

    @classmethod
    def constant(cls, space, value):
        return cls(space, [value] * space.size)

    def __getitem__(self, x):
        return self.values[x]

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def scale(self, c):
        return MeasureVec(self.space, [c * v for v in self.values])

    def abs(self):
        return MeasureVec(self.space, [abs(v) for v in self.values])

    def total_variation(self):
        return sum(abs(v) * w for v, w in zip(self.values, self.space.weights))

    def __eq__(self, other):
        return (
            isinstance(other, MeasureVec)
            and self.space == other.space
            and self.values == other.values
        )

    def __repr__(self):
        return f"MeasureVec({self.values!r})"


class PairPotential:
    """Symmetric pair energies on a species space, with stability constants.

    v[x][y] is the interaction energy, +inf for hard cores.  b_stability[x]
    is a claimed stability constant B(x) (sum_{i<j} v(x_i, x_j) >=
    -sum_i B(x_i) for admissible configurations); it is taken on trust here
    and checked by brute force in check_stability.  b_star[x] must dominate
    max(0, -min_y v(x, y)); by default it is set to exactly that value.
    """

    def __init__(self, space, beta, v, b_stability=None, b_star=None):
        if not beta > 0:
            raise DomainError("beta must be positive")
        v = tuple(tuple(row) for row in v)
        _check_square_symmetric(v, space.size, "potential matrix")
        self.space = space
        self.beta = beta
        self.v = v
        if b_stability is None:
            b_stability = (0,) * space.size
        self.b_stability = tuple(b_stability)
        if len(self.b_stability) != space.size:
            raise StructureError("b_stability length must match species count")
        floor = [max(0, -min(row)) for row in v]
        if b_star is None:
            b_star = floor
        self.b_star = tuple(b_star)
        if len(self.b_star) != space.size:
            raise StructureError("b_star length must match species count")
        for x, (bs, fl) in enumerate(zip(self.b_star, floor)):
            if bs < fl:
                raise StructureError(
                    f"b_star[{x}] = {bs} is below the attraction floor {fl}"
                )

    @property
    def size(self):
        return self.space.size

    def has_diagonal_hard_core(self):
        return all(is_inf(self.v[x][x]) for x in range(self.size))

    def is_hard_core_only(self):
        """True when every entry is 0 or +inf (Mayer matrices are then exact)."""
        return all(e == 0 or is_inf(e) for row in self.v for e in row)


class MayerMatrices:
    """The matrices f and fbar derived from a pair potential.

    ``exact`` marks whether the entries are exact (Fraction/int) or floats.
    f entries lie in [-1, inf); fbar entries lie in [0, 1].
    """

    def __init__(self, space, f, f_bar, exact):
        f = tuple(tuple(row) for row in f)
        f_bar = tuple(tuple(row) for row in f_bar)
        _check_square_symmetric(f, space.size, "f matrix")
        _check_square_symmetric(f_bar, space.size, "fbar matrix")
        for row in f:
            for e in row:
                if e < -1:
                    raise StructureError("f entries must be >= -1")
        for row in f_bar:
            for e in row:
                if not (0 <= e <= 1):
                    raise StructureError("fbar entries must lie in [0, 1]")
        self.space = space
        self.f = f
        self.f_bar = f_bar
        self.exact = exact
        self._f_np = None

    @classmethod
    def from_f(cls, space, f, exact=True):
        """Build Mayer matrices directly from an f matrix.

        fbar is reconstructed from f through the defining potential:
        fbar = -f when f <= 0 and fbar = f / (1 + f) when f > 0, which keeps
        rational entries rational.
        """
        f_bar = [
            [(-e if e <= 0 else e / (1 + e)) for e in row]
            for row in f
        ]
        return cls(space, f, f_bar, exact)

    def f_array(self):
        """Float numpy view of f (cached); for vectorized evaluation paths."""
        if self._f_np is None:
            import numpy as np

            self._f_np = np.array([[float(e) for e in row] for row in self.f])
        return self._f_np

    @property
    def size(self):
        return self.space.size


def build_mayer(pot, exact=None):
    """Mayer matrices for a pair potential.

    exact=None auto-detects: entries are exact integers when every energy is
    0 or +inf (the hard-core case), floats otherwise.  Requesting exact=True
    for a potential with other finite energies is an error since exp(-beta*v)
    is then irrational.
    """
    if exact is None:
        exact = pot.is_hard_core_only()
    if exact and not pot.is_hard_core_only():
        raise DomainError("exact Mayer matrices require all energies in {0, +inf}")
    f = []
    f_bar = []
    for row in pot.v:
        frow = []
        fbrow = []
        for e in row:
            if is_inf(e):
                frow.append(Fraction(-1) if exact else -1.0)
                fbrow.append(Fraction(1) if exact else 1.0)
            elif e == 0:
                frow.append(Fraction(0) if exact else 0.0)
                fbrow.append(Fraction(0) if exact else 0.0)
            else:
                frow.append(math.expm1(-pot.beta * e))
                fbrow.append(-math.expm1(-pot.beta * abs(e)))
        f.append(frow)
        f_bar.append(fbrow)
    return MayerMatrices(pot.space, f, f_bar, exact)


def recover_potential(mayer, beta):
    """Invert f -> v via v = -(1/beta) * log(1 + f); hard cores map back to +inf."""
    v = []
    for row in mayer.f:
        vrow = []
        for e in row:
            if e == -1:
                vrow.append(INF)
            else:
                vrow.append(-math.log1p(float(e)) / beta)
        v.append(vrow)
    return v


@dataclass
class StabilityCertificate:
    """Outcome of the brute-force stability check."""

    passed: bool
    n_check: int
    worst_margin: object
    worst_multiset: tuple
    margins: dict = field(default_factory=dict)


def check_stability(pot, n_check=6):
    """Brute-force stability check over all multisets of size 2..n_check.

    For each multiset the margin is sum_{i<j} v + sum_i B(x_i); configurations
    containing a hard-core pair are skipped (infinite energy, trivially
    stable).  The certificate fails if any margin is negative.
    """
    if n_check < 2:
        raise DomainError("n_check must be >= 2")
    S = pot.size
    v = pot.v
    B = pot.b_stability
    worst = None
    worst_ms = ()
    margins = {}
    passed = True
    for n in range(2, n_check + 1):
        for ms in combinations_with_replacement(range(S), n):
            energy = 0
            hard = False
            for i in range(n):
                for j in range(i + 1, n):
                    e = v[ms[i]][ms[j]]
                    if is_inf(e):
                        hard = True
                        break
                    energy += e
                if hard:
                    break
            if hard:
                continue
            margin = energy + sum(B[x] for x in ms)
            margins[ms] = margin
            if worst is None or margin < worst:
                worst = margin
                worst_ms = ms
            if margin < 0:
                passed = False
    if worst is None:
        worst = 0
    return StabilityCertificate(passed, n_check, worst, worst_ms, margins)


def c_bar(mayer, z_abs):
    """Per-species interaction mass: x -> sum_y fbar(x, y) |z|(y) w(y)."""
    w = mayer.space.weights
    vals = z_abs.values if isinstance(z_abs, MeasureVec) else tuple(z_abs)
    return tuple(
        sum(self_row[y] * abs(vals[y]) * w[y] for y in range(mayer.size))
        for self_row in mayer.f_bar
    )


# ---------------------------------------------------------------------------
# Species file (JSON) loading


def _coerce_energy(e):
    if isinstance(e, str):
        if e in ("inf", "+inf", "Infinity"):
            return INF
        raise DomainError(f"unrecognized energy entry {e!r}")
    return e


def _dist(p, q):
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p, q)))


def _ring_dist(a, b, period):
    d = abs(a - b)
    return min(d, period - d)


def _segment_endpoints(center, angle, length):
    dx = 0.5 * length * math.cos(angle)
    dy = 0.5 * length * math.sin(angle)
    return (center[0] - dx, center[1] - dy), (center[0] + dx, center[1] + dy)


def _orient(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r):
    return (
        min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
        and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])
    )


def segments_intersect(a1, a2, b1, b2):
    """Whether closed segments a1-a2 and b1-b2 intersect (collinear included)."""
    d1 = _orient(b1, b2, a1)
    d2 = _orient(b1, b2, a2)
    d3 = _orient(a1, a2, b1)
    d4 = _orient(a1, a2, b2)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    if d1 == 0 and _on_segment(b1, b2, a1):
        return True
    if d2 == 0 and _on_segment(b1, b2, a2):
        return True
    if d3 == 0 and _on_segment(a1, a2, b1):
        return True
    if d4 == 0 and _on_segment(a1, a2, b2):
        return True
    return False


def _potential_matrix_from_kind(space, kind, params):
    S = space.size
    if kind == "matrix":
        v = [[_coerce_energy(e) for e in row] for row in params["v"]]
        return v
    if kind == "hard_rod":
        a = params["length"]
        period = params.get("period")
        v = [[0.0] * S for _ in range(S)]
        for i in range(S):
            for j in range(S):
                xi = space.payload(i)["position"]
                xj = space.payload(j)["position"]
                d = _ring_dist(xi, xj, period) if period else abs(xi - xj)
                v[i][j] = INF if d < a else 0.0
        return v
    if kind == "hard_sphere":
        default_r = params.get("radius")
        v = [[0.0] * S for _ in range(S)]
        for i in range(S):
            for j in range(S):
                pi, pj = space.payload(i), space.payload(j)
                ri = pi.get("radius", default_r)
                rj = pj.get("radius", default_r)
                d = _dist(pi["position"], pj["position"])
                v[i][j] = INF if d < ri + rj else 0.0
        return v
    if kind == "rods2d":
        length = params["length"]
        v = [[0.0] * S for _ in range(S)]
        segs = []
        for i in range(S):
            p = space.payload(i)
            segs.append(_segment_endpoints(p["position"], p["angle"], length))
        for i in range(S):
            for j in range(S):
                a1, a2 = segs[i]
                b1, b2 = segs[j]
                v[i][j] = INF if segments_intersect(a1, a2, b1, b2) else 0.0
        return v
    raise DomainError(f"unknown potential kind {kind!r}")


def load_species_json(source):
    """Load a species file: returns (SpeciesSpace, PairPotential).

    ``source`` is a path, a JSON string, or an already-parsed dict.  Format:

        {"beta": 1.0,
         "species": [{"id": 0, "weight": 1.0, "payload": {...}}, ...],
         "potential": {"kind": "matrix" | "hard_rod" | "hard_sphere" | "rods2d",
                       "params": {...}}}

    The potential block may also carry "B" and "Bstar" arrays (stability
    constants per species).
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = None
        try:
            with open(source) as fh:
                text = fh.read()
        except (OSError, TypeError):
            text = source
        doc = json.loads(text)
    try:
        beta = doc["beta"]
        recs = sorted(doc["species"], key=lambda r: r["id"])
        space = SpeciesSpace(
            Species(r["id"], r["weight"], r.get("payload")) for r in recs
        )
        pot_doc = doc["potential"]
        v = _potential_matrix_from_kind(space, pot_doc["kind"], pot_doc.get("params", {}))
    except (KeyError, IndexError) as exc:
        raise StructureError(f"malformed species file: missing {exc}") from exc
    pot = PairPotential(
        space,
        beta,
        v,
        b_stability=pot_doc.get("B"),
        b_star=pot_doc.get("Bstar"),
    )
    return space, pot
