"""Tree coefficients of the inverse activity series, and their fixed point.

The rooted series T(q; nu) with coefficients t_n solves

    T(q; nu) = exp( sum_n (1/n!) sum_x A_n(q; x) T(x_1; nu)...T(x_n; nu) nu^n )

and the density-to-activity map is zeta(q) = nu(q) T(q; nu).  The
coefficients obey a triangular recursion: with t_0 = 1,

    B_n(q; x_1..x_n) = sum over nonempty J of A_(|J|)(q; x_J) *
                       sum over assignments of the rest to owners j in J of
                       prod_j t_(|V_j|)(x_j; x_(V_j))
    t_n(q; x)        = sum over set partitions P of [n] of
                       prod_blocks B_(|block|)(q; x_block)

so t_n needs only t_1..t_(n-1).  t_1 = B_1 = A_1.

The same coefficients arise as sums over rooted labeled trees whose child
sets are partitioned into cliques, each clique J at vertex i weighing
A_(|J|+1)(x_i; (x_j for j in J)); that enumeration is the independent
oracle ``tn_via_trees``.  Two verification routines re-derive the fixed
point (and its activity-side variant) from the generic series operations
and report the residual, which must vanish identically in exact mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product

from .certs import BoundCertificate, ResidualReport
from .errors import CapabilityError, DomainError
from .fps import (
    FormalSeries,
    RootedSeriesFamily,
    canonical_indices,
    compose_measure,
    compose_templates,
    exp_series,
    set_partitions,
    sym_factor,
)
from .graphs import _prufer_edges

TREE_ORACLE_MAX = 5


class TnFamily(RootedSeriesFamily):
    """Tree coefficients t_n(q; .); order 0 is identically 1.

    Carries the intermediate family B_n on ``b_family`` for inspection.
    """

    def __init__(self, space, trunc, coeffs, b_family):
        super().__init__(space, trunc, coeffs, allow_large=True)
        self.b_family = b_family


def compute_tn(A, N=None):
    """Tree coefficients t_1..t_N from the activity coefficients A.

    A is a rooted family whose order-n slice holds A_n(q; .); its order-0
    slice must vanish.
    """
    if N is None:
        N = A.trunc
    if N > A.trunc:
        raise DomainError("requested order exceeds the activity family")
    if any(v != 0 for v in A.coeffs[0].values()):
        raise DomainError("activity family must have zero order-0 slice")
    space = A.space
    S = space.size
    t = RootedSeriesFamily(space, N, allow_large=True)
    b = RootedSeriesFamily(space, N, allow_large=True)
    for q in range(S):
        t.coeffs[0][(q, ())] = 1
    tc, bc, ac = t.coeffs, b.coeffs, A.coeffs
    for n in range(1, N + 1):
        templates = compose_templates(n)
        partitions = set_partitions(n)
        bcomp = bc[n]
        for q in range(S):
            for ms in canonical_indices(S, n):
                total = 0
                for J, blocks in templates:
                    a_val = ac[len(J)][(q, tuple(ms[p] for p in J))]
                    if a_val == 0:
                        continue
                    term = a_val
                    for j, Vj in zip(J, blocks):
                        term = term * tc[len(Vj)][(ms[j], tuple(ms[p] for p in Vj))]
                        if term == 0:
                            break
                    total += term
                bcomp[(q, ms)] = total
        tcomp = tc[n]
        for q in range(S):
            for ms in canonical_indices(S, n):
                total = 0
                for blocks in partitions:
                    term = 1
                    for blk in blocks:
                        term = term * bc[len(blk)][(q, tuple(ms[p] for p in blk))]
                        if term == 0:
                            break
                    total += term
                tcomp[(q, ms)] = total
    return TnFamily(space, N, tc, b)


# ---------------------------------------------------------------------------
# Enriched-tree oracle


@dataclass(frozen=True)
class EnrichedTree:
    """Rooted labeled tree on vertices 0..n with children grouped in cliques.

    ``parent[v]`` is the parent of v (-1 for the root 0); ``cliques[v]`` is
    the set partition of v's children, each block a sorted tuple.
    """

    parent: tuple
    cliques: tuple


def _rooted_parent_array(n_vertices, edges):
    adj = [[] for _ in range(n_vertices)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    parent = [-1] * n_vertices
    stack = [0]
    seen = [False] * n_vertices
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if not seen[u]:
                seen[u] = True
                parent[u] = v
                stack.append(u)
    return tuple(parent)


def enumerate_enriched_trees(n):
    """All enriched trees on vertices {0..n} rooted at 0 (n <= 5).

    Every labeled tree on n+1 vertices is visited via its Pruefer sequence;
    for each, the children of every vertex are partitioned in all ways.
    There is 1 enriched tree for n = 1 and 4 for n = 2.
    """
    if n < 1:
        raise DomainError("enriched trees need n >= 1")
    if n > TREE_ORACLE_MAX:
        raise CapabilityError(f"enriched-tree enumeration supports n <= {TREE_ORACLE_MAX}")
    m = n + 1
    seqs = [()] if m == 2 else iter_product(range(m), repeat=m - 2)
    for seq in seqs:
        parent = _rooted_parent_array(m, _prufer_edges(m, seq))
        children = [[] for _ in range(m)]
        for v in range(1, m):
            children[parent[v]].append(v)
        per_vertex = []
        for v in range(m):
            kids = tuple(children[v])
            parts = [
                tuple(tuple(kids[p] for p in blk) for blk in blocks)
                for blocks in set_partitions(len(kids))
            ]
            per_vertex.append(parts)
        for choice in iter_product(*per_vertex):
            yield EnrichedTree(parent, tuple(choice))


def tn_via_trees(A, n, q, xs):
    """t_n(q; xs) summed over enriched trees (oracle path, n <= 5)."""
    if len(xs) != n:
        raise DomainError("xs must have length n")
    labels = (q,) + tuple(xs)
    total = 0
    for tree in enumerate_enriched_trees(n):
        term = 1
        for v in range(n + 1):
            for clique in tree.cliques[v]:
                tail = tuple(labels[u] for u in clique)
                term = term * A.value(len(clique), labels[v], tail)
                if term == 0:
                    break
            if term == 0:
                break
        total += term
    return total


# ---------------------------------------------------------------------------
# Evaluation and certificates


def eval_T(t, nu, q):
    """Numeric T(q; nu) = 1 + sum_n (1/n!) sum_x t_n(q; x) nu^n."""
    vals = tuple(nu)
    w = t.space.weights
    total = 0
    for n in range(t.trunc + 1):
        for (root, ms), v in t.coeffs[n].items():
            if root != q or v == 0:
                continue
            term = v
            for x in ms:
                term = term * vals[x] * w[x]
            total += term * Fraction(1, sym_factor(ms))
    return total


def eval_T_abs(t, nu, b):
    """Certificate that 1 + sum (1/n!) sum |t_n| |nu|^n <= exp(b(q)) per q.

    Also reports, per root, the implied weight log(partial sum): the
    smallest constant the truncated sum itself would certify.
    """
    vals = tuple(nu)
    w = t.space.weights
    S = t.space.size
    sums = [0.0] * S
    for n in range(t.trunc + 1):
        for (root, ms), v in t.coeffs[n].items():
            if v == 0:
                continue
            term = abs(float(v))
            for x in ms:
                term *= abs(float(vals[x])) * float(w[x])
            sums[root] += term / sym_factor(ms)
    b = tuple(b)
    margins = tuple(math.exp(float(b[q])) - sums[q] for q in range(S))
    implied = tuple(math.log(s) if s > 0 else float("-inf") for s in sums)
    return BoundCertificate(
        condition="Mb",
        passed=all(m >= 0 for m in margins),
        margins=margins,
        b=b,
        trunc=t.trunc,
        notes="partial sums through the truncation order only",
        extras={"sums": tuple(sums), "implied_b": implied},
    )


def _t_as_series(t, q):
    """T(q; .) as a plain series: constant 1 plus the t_n slices."""
    out = FormalSeries(t.space, t.trunc, allow_large=True)
    out.coeffs[0][()] = 1
    for n in range(1, t.trunc + 1):
        for ms in canonical_indices(t.space.size, n):
            out.coeffs[n][ms] = t.coeffs[n][(q, ms)]
    return out


def verify_FP(A, t, tol=0):
    """Residual of the defining fixed point, rebuilt from generic series ops.

    For each root q the inner series B = A(q; .) composed with the family T
    is exponentiated and compared against T(q; .) coefficientwise.
    """
    worst = 0
    per_order = {n: 0 for n in range(t.trunc + 1)}
    exact = True
    for q in range(t.space.size):
        K_q = A.root_series(q, allow_large=True)
        lhs = exp_series(compose_measure(K_q, t))
        rhs = _t_as_series(t, q)
        for n in range(t.trunc + 1):
            for ms, v in lhs.coeffs[n].items():
                delta = abs(v - rhs.coeffs[n][ms])
                exact = exact and delta == 0
                if delta > per_order[n]:
                    per_order[n] = delta
                if delta > worst:
                    worst = delta
    return ResidualReport("fixed_point", worst, per_order, exact=exact)


def verify_FPprime(A, t, tol=0):
    """Residual of the activity-side fixed point.

    Substituting the factor family E(x; z) = exp(-A(x; z)) into T(q; .)
    must reproduce exp(A(q; z)) coefficientwise.
    """
    space = A.space
    e_fam = exp_family(A, sign=-1)
    worst = 0
    per_order = {n: 0 for n in range(t.trunc + 1)}
    exact = True
    for q in range(space.size):
        lhs = compose_measure(_t_as_series(t, q), e_fam)
        rhs = exp_series(A.root_series(q, allow_large=True))
        for n in range(t.trunc + 1):
            for ms, v in lhs.coeffs[n].items():
                delta = abs(v - rhs.coeffs[n][ms])
                exact = exact and delta == 0
                if delta > per_order[n]:
                    per_order[n] = delta
                if delta > worst:
                    worst = delta
    return ResidualReport("fixed_point_activity", worst, per_order, exact=exact)


def exp_family(A, sign=1):
    """The rooted family x -> exp(sign * A(x; .)) computed per root."""
    space = A.space
    fam = RootedSeriesFamily(space, A.trunc, allow_large=True)
    for x in range(space.size):
        series = exp_series(A.root_series(x, allow_large=True).scale(sign))
        for n in range(A.trunc + 1):
            for ms in canonical_indices(space.size, n):
                fam.coeffs[n][(x, ms)] = series.coeffs[n][ms]
    return fam
