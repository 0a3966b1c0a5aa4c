"""Truncated formal power series in a measure over a finite species space.

A series K is the collection of symmetric coefficient functions K_n(x_1..x_n)
for 0 <= n <= N; it stands for the formal sum

    K[nu] = sum_n (1/n!) * sum_{x_1..x_n} K_n(x_1..x_n) nu(x_1)...nu(x_n)

with nu a measure on the species space.  Coefficients are stored once per
canonical (sorted) multi-index; evaluation at an arbitrary tuple sorts it.
All operations below work coefficientwise on positions of the canonical
representative, which realizes the multinomial multiplicities implicitly, so
no factorials ever appear until a series is summed against a measure.

The operations mirror the usual algebra of such series: pointwise sum,
product (subset splitting), iterated product, composition with a univariate
series (set-partition sum), exp and log, the variational derivative (slot
pinning), and composition with a rooted family G, where the substituted
measure is G[x; nu] nu(dx):

    (K o G)_n(x_1..x_n) = sum over nonempty J subset [n] of K_(|J|)((x_j)_J)
        * sum over assignments of [n] minus J to owners j in J of
          prod_j G_(|V_j|)(x_j; (x_v)_{V_j})

Scalars may be Fractions (exact mode), floats, or complex; the code never
divides, so exactness is preserved end to end.
"""

from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, combinations_with_replacement, product
from math import factorial

from .errors import CapabilityError, DomainError, StructureError, check_scale
from .species import MeasureVec, SpeciesSpace

# ---------------------------------------------------------------------------
# Index templates, memoized per order and shared by every tensor operation.


@lru_cache(maxsize=None)
def subset_splits(n):
    """All (J, complement) splits of positions 0..n-1, including empty J."""
    pos = tuple(range(n))
    out = []
    for k in range(n + 1):
        for J in combinations(pos, k):
            in_j = set(J)
            rest = tuple(p for p in pos if p not in in_j)
            out.append((J, rest))
    return tuple(out)


@lru_cache(maxsize=None)
def set_partitions(n):
    """Set partitions of 0..n-1 as tuples of blocks (each block a tuple)."""
    if n == 0:
        return ((),)
    out = []

    def extend(p, partial):
        if p == n:
            out.append(tuple(tuple(b) for b in partial))
            return
        for b in partial:
            b.append(p)
            extend(p + 1, partial)
            b.pop()
        partial.append([p])
        extend(p + 1, partial)
        partial.pop()

    extend(0, [])
    return tuple(out)


@lru_cache(maxsize=None)
def compose_templates(n):
    """Templates (J, blocks) for composition with a rooted family.

    J runs over nonempty subsets of positions 0..n-1; blocks is the tuple,
    aligned with J, of the (possibly empty) position sets assigned to each
    owner in J.  Every assignment of the complement to owners appears once.
    """
    pos = tuple(range(n))
    out = []
    for k in range(1, n + 1):
        for J in combinations(pos, k):
            in_j = set(J)
            rest = tuple(p for p in pos if p not in in_j)
            for owners in product(range(k), repeat=len(rest)):
                blocks = [[] for _ in range(k)]
                for p, o in zip(rest, owners):
                    blocks[o].append(p)
                out.append((J, tuple(tuple(b) for b in blocks)))
    return tuple(out)


def canonical_indices(size, n):
    """Canonical (sorted) multi-indices of order n over ``size`` species."""
    return combinations_with_replacement(range(size), n)


def sym_factor(ms):
    """Product of multiplicity factorials of a canonical multi-index."""
    out = 1
    run = 1
    for a, b in zip(ms, ms[1:]):
        run = run + 1 if a == b else 1
        out *= run if run > 1 else 1
    # the loop above multiplies run each time it grows: 2, then 2*3, ...
    return out


def _sym_factor_slow(ms):
    from collections import Counter

    out = 1
    for c in Counter(ms).values():
        out *= factorial(c)
    return out


# sym_factor above is branch-light but easy to get wrong; freeze against the
# obvious definition once at import time.
for _ms in [(0,), (0, 0), (0, 1), (0, 0, 0), (0, 0, 1, 1, 1), (1, 2, 2, 3, 3, 3)]:
    assert sym_factor(_ms) == _sym_factor_slow(_ms)


class SymTensor:
    """Read-only view of one symmetric coefficient: order plus canonical map."""

    __slots__ = ("order", "data")

    def __init__(self, order, data):
        self.order = order
        self.data = data

    def value(self, xs):
        return self.data[tuple(sorted(xs))]

    def items(self):
        return self.data.items()


class FormalSeries:
    """Truncated series: coefficient dicts for orders 0..trunc.

    Storage is dense over canonical multi-indices, which keeps equality and
    residual checks trivial.  Instances are treated as immutable.
    """

    __slots__ = ("space", "trunc", "coeffs")

    def __init__(self, space, trunc, coeffs=None, allow_large=False):
        if trunc < 0:
            raise DomainError("truncation order must be >= 0")
        check_scale(order=trunc, species=space.size, allow_large=allow_large)
        self.space = space
        self.trunc = trunc
        if coeffs is None:
            coeffs = [
                {ms: 0 for ms in canonical_indices(space.size, n)}
                for n in range(trunc + 1)
            ]
        self.coeffs = coeffs

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, space, trunc, allow_large=False):
        return cls(space, trunc, allow_large=allow_large)

    @classmethod
    def unit(cls, space, trunc, allow_large=False):
        s = cls(space, trunc, allow_large=allow_large)
        s.coeffs[0][()] = 1
        return s

    @classmethod
    def from_function(cls, space, trunc, fn, allow_large=False):
        """Build with fn(order, multi_index) -> value on canonical indices."""
        s = cls(space, trunc, allow_large=allow_large)
        for n in range(trunc + 1):
            s.coeffs[n] = {
                ms: fn(n, ms) for ms in canonical_indices(space.size, n)
            }
        return s

    # -- access ------------------------------------------------------------

    def component(self, n):
        return SymTensor(n, self.coeffs[n])

    def value(self, n, xs):
        """Coefficient at order n evaluated at an arbitrary species tuple."""
        return self.coeffs[n][tuple(sorted(xs))]

    def constant(self):
        return self.coeffs[0][()]

    # -- algebra -----------------------------------------------------------

    def _like(self, coeffs):
        out = FormalSeries.__new__(FormalSeries)
        out.space = self.space
        out.trunc = self.trunc
        out.coeffs = coeffs
        return out

    def _check_compatible(self, other):
        if self.space != other.space or self.trunc != other.trunc:
            raise StructureError("series must share space and truncation order")

    def __add__(self, other):
        self._check_compatible(other)
        return self._like(
            [
                {ms: c[ms] + d[ms] for ms in c}
                for c, d in zip(self.coeffs, other.coeffs)
            ]
        )

    def __sub__(self, other):
        self._check_compatible(other)
        return self._like(
            [
                {ms: c[ms] - d[ms] for ms in c}
                for c, d in zip(self.coeffs, other.coeffs)
            ]
        )

    def scale(self, c):
        return self._like([{ms: c * v for ms, v in comp.items()} for comp in self.coeffs])

    def __neg__(self):
        return self.scale(-1)

    def __mul__(self, other):
        if isinstance(other, FormalSeries):
            return mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        return (
            isinstance(other, FormalSeries)
            and self.space == other.space
            and self.trunc == other.trunc
            and all(c == d for c, d in zip(self.coeffs, other.coeffs))
        )

    def max_abs_diff(self, other):
        self._check_compatible(other)
        worst = 0
        for c, d in zip(self.coeffs, other.coeffs):
            for ms, v in c.items():
                delta = abs(v - d[ms])
                if delta > worst:
                    worst = delta
        return worst

    def evaluate(self, nu):
        """Numeric value sum_n (1/n!) sum_{x vec} K_n nu^n via canonical sums."""
        vals = nu.values if isinstance(nu, MeasureVec) else tuple(nu)
        w = self.space.weights
        total = 0
        for n in range(self.trunc + 1):
            for ms, v in self.coeffs[n].items():
                if v == 0:
                    continue
                term = v
                for x in ms:
                    term = term * vals[x] * w[x]
                total += term * Fraction(1, sym_factor(ms))
        return total

    # -- serialization -----------------------------------------------------

    def to_json_dict(self):
        orders = {}
        for n in range(self.trunc + 1):
            orders[str(n)] = [
                {"idx": list(ms), "value": _scalar_to_json(v)}
                for ms, v in sorted(self.coeffs[n].items())
            ]
        return {
            "weights": [_scalar_to_json(w) for w in self.space.weights],
            "trunc": self.trunc,
            "orders": orders,
        }

    def to_json(self):
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, doc, allow_large=False):
        space = SpeciesSpace.from_weights([_scalar_from_json(w) for w in doc["weights"]])
        s = cls(space, doc["trunc"], allow_large=allow_large)
        for n_str, entries in doc["orders"].items():
            n = int(n_str)
            for e in entries:
                s.coeffs[n][tuple(e["idx"])] = _scalar_from_json(e["value"])
        return s

    @classmethod
    def from_json(cls, text, allow_large=False):
        return cls.from_json_dict(json.loads(text), allow_large=allow_large)

    def __repr__(self):
        return f"FormalSeries(S={self.space.size}, N={self.trunc})"


def _scalar_to_json(v):
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, int):
        return f"{v}/1"
    return v


def _scalar_from_json(v):
    if isinstance(v, str):
        num, _, den = v.partition("/")
        return Fraction(int(num), int(den or "1"))
    if isinstance(v, list):
        return complex(v[0], v[1])
    return v


class RootedSeriesFamily:
    """A family of series G(q; . ) indexed by a distinguished root species q.

    Coefficients are stored per order as maps (q, canonical tail) -> value;
    only the tail is symmetrized, the root slot is genuinely distinguished.
    """

    __slots__ = ("space", "trunc", "coeffs")

    def __init__(self, space, trunc, coeffs=None, allow_large=False):
        if trunc < 0:
            raise DomainError("truncation order must be >= 0")
        check_scale(order=trunc, species=space.size, allow_large=allow_large)
        self.space = space
        self.trunc = trunc
        if coeffs is None:
            coeffs = [
                {
                    (q, ms): 0
                    for q in range(space.size)
                    for ms in canonical_indices(space.size, n)
                }
                for n in range(trunc + 1)
            ]
        self.coeffs = coeffs

    @classmethod
    def from_function(cls, space, trunc, fn, allow_large=False):
        """Build with fn(order, root, tail multi-index) -> value."""
        fam = cls(space, trunc, allow_large=allow_large)
        for n in range(trunc + 1):
            fam.coeffs[n] = {
                (q, ms): fn(n, q, ms)
                for q in range(space.size)
                for ms in canonical_indices(space.size, n)
            }
        return fam

    def value(self, n, q, xs):
        return self.coeffs[n][(q, tuple(sorted(xs)))]

    def root_series(self, q, allow_large=False):
        """The plain series K with K_n = G_n(q; . )."""
        out = FormalSeries(self.space, self.trunc, allow_large=allow_large)
        for n in range(self.trunc + 1):
            out.coeffs[n] = {
                ms: self.coeffs[n][(q, ms)]
                for ms in canonical_indices(self.space.size, n)
            }
        return out

    def max_abs_diff(self, other):
        if self.space != other.space or self.trunc != other.trunc:
            raise StructureError("families must share space and truncation order")
        worst = 0
        for c, d in zip(self.coeffs, other.coeffs):
            for key, v in c.items():
                delta = abs(v - d[key])
                if delta > worst:
                    worst = delta
        return worst

    def __eq__(self, other):
        return (
            isinstance(other, RootedSeriesFamily)
            and self.space == other.space
            and self.trunc == other.trunc
            and all(c == d for c, d in zip(self.coeffs, other.coeffs))
        )

    def __repr__(self):
        return f"RootedSeriesFamily(S={self.space.size}, N={self.trunc})"


# ---------------------------------------------------------------------------
# Operations


def add(K, G):
    return K + G


def scale(c, K):
    return K.scale(c)


def mul(K, G):
    """Series product: (KG)_n = sum over subsets J of K on J times G on rest."""
    K._check_compatible(G)
    out = FormalSeries(K.space, K.trunc, allow_large=True)
    kc, gc = K.coeffs, G.coeffs
    for n in range(K.trunc + 1):
        comp = out.coeffs[n]
        for ms in comp:
            total = 0
            for J, rest in subset_splits(n):
                a = kc[len(J)][tuple(ms[p] for p in J)]
                if a == 0:
                    continue
                b = gc[len(rest)][tuple(ms[p] for p in rest)]
                if b == 0:
                    continue
                total += a * b
            comp[ms] = total
    return out


def multi_product(factors):
    """Product of several series, computed by the direct assignment sum.

    Each position is assigned to one factor; the term is the product of each
    factor's coefficient on its assigned positions.  Equal to a left fold of
    ``mul`` (checked in the tests), but computed independently.
    """
    factors = list(factors)
    if not factors:
        raise DomainError("multi_product needs at least one factor")
    first = factors[0]
    for f in factors[1:]:
        first._check_compatible(f)
    r = len(factors)
    out = FormalSeries(first.space, first.trunc, allow_large=True)
    for n in range(first.trunc + 1):
        comp = out.coeffs[n]
        for ms in comp:
            total = 0
            for owners in product(range(r), repeat=n):
                term = 1
                for ell, fac in enumerate(factors):
                    sel = tuple(ms[p] for p in range(n) if owners[p] == ell)
                    term = term * fac.coeffs[len(sel)][sel]
                    if term == 0:
                        break
                total += term
            comp[ms] = total
    return out


def compose_univariate(fcoeffs, K):
    """Compose a univariate exponential-type series F with K (K_0 must be 0).

    fcoeffs lists f_0..f_M for F(t) = sum f_m t^m / m!.  The result is
    (F o K)_n = sum over set partitions P of [n] of f_(|P|) prod_blocks K.
    Missing f_m beyond the list are treated as 0.
    """
    if K.constant() != 0:
        raise DomainError("composition requires a series with zero constant term")
    fc = list(fcoeffs)

    def f_at(m):
        return fc[m] if m < len(fc) else 0

    out = FormalSeries(K.space, K.trunc, allow_large=True)
    out.coeffs[0][()] = f_at(0)
    kc = K.coeffs
    for n in range(1, K.trunc + 1):
        comp = out.coeffs[n]
        for ms in comp:
            total = 0
            for blocks in set_partitions(n):
                coeff = f_at(len(blocks))
                if coeff == 0:
                    continue
                term = coeff
                for b in blocks:
                    term = term * kc[len(b)][tuple(ms[p] for p in b)]
                    if term == 0:
                        break
                total += term
            comp[ms] = total
    return out


def exp_series(K):
    """exp of a series with zero constant term (composition with exp)."""
    return compose_univariate([1] * (K.trunc + 1), K)


def log_series(K):
    """log of a series with constant term 1, by triangular inversion.

    Solves exp(L) = K order by order: the single-block partition isolates
    L_n, every other partition involves only lower orders.
    """
    if K.constant() != 1:
        raise DomainError("log requires a series with constant term 1")
    out = FormalSeries(K.space, K.trunc, allow_large=True)
    lc = out.coeffs
    for n in range(1, K.trunc + 1):
        comp = lc[n]
        for ms in comp:
            total = K.coeffs[n][ms]
            for blocks in set_partitions(n):
                if len(blocks) == 1:
                    continue
                term = 1
                for b in blocks:
                    term = term * lc[len(b)][tuple(ms[p] for p in b)]
                    if term == 0:
                        break
                total -= term
            comp[ms] = total
    return out


def var_derivative(K, q):
    """Variational derivative at species q: pins one slot, drops one order."""
    if K.trunc == 0:
        raise DomainError("cannot differentiate a constant series")
    out = FormalSeries(K.space, K.trunc - 1, allow_large=True)
    for n in range(K.trunc):
        comp = out.coeffs[n]
        for ms in comp:
            comp[ms] = K.coeffs[n + 1][tuple(sorted((q,) + ms))]
    return out


def compose_measure(K, G):
    """Compose K with the substitution nu(dx) -> G(x; nu) nu(dx).

    G is a rooted family; its order-0 slice G_0(q) is the multiplier of the
    identity substitution and may be any value.  The constant term of the
    result is K_0.
    """
    if K.space != G.space or K.trunc != G.trunc:
        raise StructureError("series and family must share space and truncation")
    out = FormalSeries(K.space, K.trunc, allow_large=True)
    out.coeffs[0][()] = K.constant()
    kc, gc = K.coeffs, G.coeffs
    for n in range(1, K.trunc + 1):
        comp = out.coeffs[n]
        for ms in comp:
            total = 0
            for J, blocks in compose_templates(n):
                a = kc[len(J)][tuple(ms[p] for p in J)]
                if a == 0:
                    continue
                term = a
                for j, Vj in zip(J, blocks):
                    term = term * gc[len(Vj)][(ms[j], tuple(ms[p] for p in Vj))]
                    if term == 0:
                        break
                total += term
            comp[ms] = total
    return out


# ---------------------------------------------------------------------------
# Dense debug backend: positioned-tuple storage, for cross-checking the
# canonical representation at tiny truncation orders.

_DENSE_MAX = 3


def dense_component(K, n):
    """Order-n coefficient as a map over all positioned tuples (N <= 3)."""
    if n > _DENSE_MAX:
        raise CapabilityError("dense backend is restricted to order <= 3")
    return {
        xs: K.value(n, xs) for xs in product(range(K.space.size), repeat=n)
    }


def mul_dense(K, G):
    """Product computed on positioned tuples; returns dense per-order maps."""
    K._check_compatible(G)
    if K.trunc > _DENSE_MAX:
        raise CapabilityError("dense backend is restricted to trunc <= 3")
    dk = [dense_component(K, n) for n in range(K.trunc + 1)]
    dg = [dense_component(G, n) for n in range(G.trunc + 1)]
    out = []
    for n in range(K.trunc + 1):
        comp = {}
        for xs in product(range(K.space.size), repeat=n):
            total = 0
            for J, rest in subset_splits(n):
                total += (
                    dk[len(J)][tuple(xs[p] for p in J)]
                    * dg[len(rest)][tuple(xs[p] for p in rest)]
                )
            comp[xs] = total
        out.append(comp)
    return out
