"""Graph classes over labeled vertices and their Mayer-weighted sums.

Graphs on n vertices are edge bitmasks over the C(n, 2) vertex pairs (i, j),
i < j, in lexicographic order.  The three classes used downstream are
connected graphs, biconnected graphs (no articulation vertex; a single edge
counts), and trees.  On top of the class tables this module provides

* ursell:    sum over connected graphs of the product of f over edges
             (the truncated weight of a configuration),
* d_coeff:   the same sum over biconnected graphs,
* a_coeff:   the rooted activity coefficient
             A_n(q; x) = -(prod_j (1 + f(q, x_j)) - 1) * ursell(x),

together with builders that assemble whole coefficient families as formal
series over a species space.  All evaluation paths are generic over exact
(Fraction) and float scalars; float evaluation of large biconnected sums is
vectorized with numpy.
"""

from __future__ import annotations

import csv
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import CapabilityError, DomainError
from .fps import FormalSeries, RootedSeriesFamily, canonical_indices
from .species import MayerMatrices

MAX_CLASS_N = {"connected": 8, "biconnected": 8, "tree": 9}
URSELL_FAST_MAX = 12
URSELL_BRUTE_MAX = 6
D_COEFF_MAX = 7


@lru_cache(maxsize=None)
def pair_order(n):
    """The fixed edge order: all (i, j) with i < j, lexicographic."""
    return tuple(combinations(range(n), 2))


class EdgeMask(NamedTuple):
    """A graph on n labeled vertices as a bitmask over pair_order(n)."""

    n: int
    mask: int

    @property
    def edges(self):
        return tuple(
            pair for p, pair in enumerate(pair_order(self.n)) if (self.mask >> p) & 1
        )

    @classmethod
    def from_edges(cls, n, edges):
        index = {pair: p for p, pair in enumerate(pair_order(n))}
        mask = 0
        for i, j in edges:
            mask |= 1 << index[(min(i, j), max(i, j))]
        return cls(n, mask)


def _prufer_edges(n, seq):
    """Edge list of the labeled tree with Pruefer sequence ``seq``."""
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        for v in range(n):
            if degree[v] == 1:
                edges.append((min(v, x), max(v, x)))
                degree[v] -= 1
                degree[x] -= 1
                break
    last = [v for v in range(n) if degree[v] == 1]
    edges.append((last[0], last[1]))
    return edges


@lru_cache(maxsize=None)
def class_masks(n, kind):
    """Sorted int64 array of edge masks of all graphs of the class."""
    if kind not in MAX_CLASS_N:
        raise DomainError(f"unknown graph class {kind!r}")
    if n < 2:
        raise DomainError("graph classes need n >= 2")
    if n > MAX_CLASS_N[kind]:
        raise CapabilityError(f"{kind} enumeration supports n <= {MAX_CLASS_N[kind]}")
    if kind == "tree":
        index = {pair: p for p, pair in enumerate(pair_order(n))}
        masks = []
        for seq in product(range(n), repeat=n - 2):
            m = 0
            for i, j in _prufer_edges(n, seq):
                m |= 1 << index[(i, j)]
            masks.append(m)
        return np.array(sorted(masks), np.int64)
    pairs = pair_order(n)
    pi = [i for i, _ in pairs]
    pj = [j for _, j in pairs]
    mode = 0 if kind == "connected" else 1
    return kernels.scan_masks(n, pi, pj, mode)


def enumerate_class(n, kind):
    """Yield each graph of the class exactly once, ascending by mask."""
    for m in class_masks(n, kind):
        yield EdgeMask(n, int(m))


def count_class(n, kind):
    return len(class_masks(n, kind))


@lru_cache(maxsize=None)
def _class_edge_matrix(n, kind):
    """Bool matrix [graphs x pairs]: which edges each class member has."""
    masks = class_masks(n, kind)
    P = len(pair_order(n))
    return (masks[:, None] >> np.arange(P)[None, :] & 1).astype(bool)


def _f_matrix(f):
    if isinstance(f, MayerMatrices):
        return f.f, f.exact
    return f, None


def ursell(f, xs, method="fast"):
    """Connected-graph sum phi_n over the species tuple xs.

    The fast path runs the subset-convolution recursion anchored at the
    first position: with w(S) = prod of (1 + f) over pairs inside S,

        phi(S) = w(S) - sum over proper T containing the anchor of
                 phi(T) w(S \\ T)

    which costs O(3^n) ring operations.  ``method='brute'`` sums over the
    enumerated connected graphs instead (independent code path, n <= 6).
    """
    fm, _ = _f_matrix(f)
    n = len(xs)
    if n == 0:
        raise DomainError("ursell needs at least one point")
    if n == 1:
        return 1
    if method == "brute":
        return ursell_bruteforce(fm, xs)
    if method != "fast":
        raise DomainError(f"unknown ursell method {method!r}")
    if n > URSELL_FAST_MAX:
        raise CapabilityError(f"ursell fast path supports n <= {URSELL_FAST_MAX}")
    size = 1 << n
    one_plus = [[1 + fm[a][b] for b in xs] for a in xs]
    w = [1] * size
    for mask in range(3, size):
        bits = mask.bit_count()
        if bits < 2:
            continue
        top = mask.bit_length() - 1
        rest = mask ^ (1 << top)
        acc = w[rest]
        j = rest
        while j:
            low = j & -j
            acc = acc * one_plus[top][low.bit_length() - 1]
            j ^= low
        w[mask] = acc
    phi = [0] * size
    for v in range(n):
        phi[1 << v] = 1
    for mask in range(3, size):
        if mask.bit_count() < 2:
            continue
        anchor = mask & -mask
        total = w[mask]
        # proper submasks of mask containing the anchor bit
        rest = mask ^ anchor
        sub = (rest - 1) & rest
        while True:
            s = sub | anchor
            if s != mask:
                total -= phi[s] * w[mask ^ s]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        phi[mask] = total
    return phi[size - 1]


def ursell_bruteforce(f, xs):
    """Connected-graph sum by explicit enumeration (oracle path, n <= 6)."""
    fm, _ = _f_matrix(f)
    n = len(xs)
    if n == 1:
        return 1
    if n > URSELL_BRUTE_MAX:
        raise CapabilityError(f"brute-force ursell supports n <= {URSELL_BRUTE_MAX}")
    pairs = pair_order(n)
    total = 0
    for m in class_masks(n, "connected"):
        term = 1
        mm = int(m)
        for p, (i, j) in enumerate(pairs):
            if (mm >> p) & 1:
                term = term * fm[xs[i]][xs[j]]
                if term == 0:
                    break
        if term != 0:
            total += term
    return total


def d_coeff(f, xs):
    """Biconnected-graph sum D_n over the species tuple xs (2 <= n <= 7).

    For a single pair this is just f(x1, x2).  Float inputs take a
    vectorized numpy path over the cached class table; exact inputs run a
    generic loop with early exit on zero factors.
    """
    fm, exact = _f_matrix(f)
    n = len(xs)
    if not 2 <= n <= D_COEFF_MAX:
        raise DomainError(f"d_coeff needs 2 <= n <= {D_COEFF_MAX}")
    if n == 2:
        return fm[xs[0]][xs[1]]
    pairs = pair_order(n)
    use_float = exact is False or (
        exact is None and isinstance(fm[xs[0]][xs[1]], float)
    )
    if use_float:
        fvec = np.array([float(fm[xs[i]][xs[j]]) for i, j in pairs])
        mat = _class_edge_matrix(n, "biconnected")
        return float(np.where(mat, fvec[None, :], 1.0).prod(axis=1).sum())
    total = 0
    for m in class_masks(n, "biconnected"):
        term = 1
        mm = int(m)
        alive = True
        for p, (i, j) in enumerate(pairs):
            if (mm >> p) & 1:
                term = term * fm[xs[i]][xs[j]]
                if term == 0:
                    alive = False
                    break
        if alive:
            total += term
    return total


def a_coeff(f, q, xs):
    """Rooted activity coefficient A_n(q; xs)."""
    fm, _ = _f_matrix(f)
    bracket = 1
    for x in xs:
        bracket = bracket * (1 + fm[q][x])
    return -(bracket - 1) * ursell(fm, xs)


def hard_core_d_table(m):
    """Biconnected sums for pure hard cores, tabulated by overlap mask.

    table[mask] = sum over biconnected graphs g whose edges all lie in the
    overlap mask of (-1)^(edge count of g).  Exact integers.
    """
    P = len(pair_order(m))
    masks = class_masks(m, "biconnected")
    table = np.zeros(1 << P, np.int64)
    for g in masks:
        g = int(g)
        sign = -1 if g.bit_count() % 2 else 1
        # add sign to every supermask of g
        free = [p for p in range(P) if not (g >> p) & 1]
        for bits in range(1 << len(free)):
            sup = g
            for t, p in enumerate(free):
                if (bits >> t) & 1:
                    sup |= 1 << p
            table[sup] += sign
    return table


# ---------------------------------------------------------------------------
# Family builders


def build_phi_series(space, mayer, N, allow_large=False):
    """Connected-sum series: order n coefficient is ursell on the tuple.

    Order 0 is 0 (no constant term in log of the partition function) and
    order 1 is identically 1.
    """
    out = FormalSeries(space, N, allow_large=allow_large)
    for n in range(1, N + 1):
        comp = out.coeffs[n]
        for ms in comp:
            comp[ms] = ursell(mayer, ms)
    return out


def build_A_family(space, mayer, N, allow_large=False):
    """Rooted activity coefficients A_n(q; .) for 1 <= n <= N (order 0 is 0)."""
    fam = RootedSeriesFamily(space, N, allow_large=allow_large)
    phi_cache = {}
    fm, _ = _f_matrix(mayer)
    for n in range(1, N + 1):
        comp = fam.coeffs[n]
        for q in range(space.size):
            for ms in canonical_indices(space.size, n):
                phi = phi_cache.get(ms)
                if phi is None:
                    phi = ursell(fm, ms)
                    phi_cache[ms] = phi
                bracket = 1
                for x in ms:
                    bracket = bracket * (1 + fm[q][x])
                comp[(q, ms)] = -(bracket - 1) * phi
    return fam


def build_D_family(space, mayer, N, allow_large=False):
    """Rooted biconnected sums: order n holds D_(n+1)(q; x_1..x_n).

    The order-0 slice is fixed to 0 so that sums over n >= 1 start at the
    pair term D_2 = f.
    """
    if N + 1 > D_COEFF_MAX:
        raise CapabilityError(
            f"biconnected family needs order + 1 <= {D_COEFF_MAX}"
        )
    fam = RootedSeriesFamily(space, N, allow_large=allow_large)
    for n in range(1, N + 1):
        comp = fam.coeffs[n]
        for q in range(space.size):
            for ms in canonical_indices(space.size, n):
                comp[(q, ms)] = d_coeff(mayer, (q,) + ms)
    return fam


def dump_class_counts(path, n_max=6, kinds=("connected", "biconnected", "tree")):
    """Write a CSV of class counts per (n, kind) up to n_max."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "kind", "count"])
        for kind in kinds:
            for n in range(2, min(n_max, MAX_CLASS_N[kind]) + 1):
                writer.writerow([n, kind, count_class(n, kind)])
