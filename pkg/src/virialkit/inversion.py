"""Density-activity inversion on a finite species space, with certificates.

The grand-canonical state bundles a species space, Mayer matrices, and a
truncation order N, and lazily caches the derived objects: the rooted
activity coefficients A_n(q; .), the tree coefficients t_n, the rooted
biconnected sums D_(n+1)(q; .), and the connected sums phi_n.  On top of it:

* forward map   rho(q) = z(q) exp(-A(q; z))
* inverse map   zeta(q) = nu(q) T(q; nu)                     (tree path)
                zeta(q) = nu(q) exp(-sum (1/n!) D_(n+1) nu^n) (biconnected path)
* exact reference quantities on hard-core spaces (partition function and
  one-point density by direct configuration sums)
* pressure and free energy as truncated biconnected sums
* convergence certificates: the pair-interaction condition on activities
  (PU), the weighted-activity condition on the coefficients (Sb), the
  combined condition (Sab), and absolute-sum conditions on D and t
* identity checks: round trip of the two maps, agreement of the two zeta
  paths, and the dissymmetry identity for connected sums, all exact in
  rational mode.

Conventions: measure values are densities relative to the quadrature
weights; all partial sums are truncated at N and certificates record that.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations, combinations_with_replacement

from .certs import BoundCertificate, ResidualReport
from .errors import CapabilityError, DomainError, StructureError, check_scale
from .fps import (
    FormalSeries,
    canonical_indices,
    compose_measure,
    compose_templates,
    exp_series,
    mul,
    sym_factor,
)
from .graphs import build_A_family, build_D_family, build_phi_series, d_coeff
from .species import MayerMatrices, MeasureVec, build_mayer, load_species_json
from .treefp import compute_tn, eval_T, eval_T_abs, exp_family, _t_as_series

AB_GRID = tuple(Fraction(5 * k, 100) for k in range(1, 61))


def _exp(v):
    return cmath.exp(v) if isinstance(v, complex) else math.exp(v)


class GCState:
    """A species space with Mayer matrices and truncation order, plus caches."""

    def __init__(self, space, pot=None, mayer=None, N=4, allow_large=False):
        if mayer is None:
            if pot is None:
                raise StructureError("GCState needs a potential or Mayer matrices")
            mayer = build_mayer(pot)
        if mayer.space != space:
            raise StructureError("Mayer matrices built on a different space")
        check_scale(order=N, species=space.size, allow_large=allow_large)
        self.space = space
        self.pot = pot
        self.mayer = mayer
        self.N = N
        self._allow_large = allow_large
        if pot is not None:
            self.beta_B = tuple(pot.beta * b for b in pot.b_stability)
            self.beta_Bstar = tuple(pot.beta * b for b in pot.b_star)
        else:
            self.beta_B = (0,) * space.size
            self.beta_Bstar = (0,) * space.size

    @classmethod
    def from_potential(cls, pot, N=4, allow_large=False):
        return cls(pot.space, pot=pot, N=N, allow_large=allow_large)

    @classmethod
    def from_f(cls, space, f, N=4, exact=True, allow_large=False):
        return cls(
            space,
            mayer=MayerMatrices.from_f(space, f, exact=exact),
            N=N,
            allow_large=allow_large,
        )

    @property
    def exact(self):
        return bool(self.mayer.exact)

    @cached_property
    def a_family(self):
        return build_A_family(self.space, self.mayer, self.N, allow_large=True)

    @cached_property
    def t_family(self):
        return compute_tn(self.a_family)

    @cached_property
    def d_family(self):
        return build_D_family(self.space, self.mayer, self.N, allow_large=True)

    @cached_property
    def phi_series(self):
        return build_phi_series(self.space, self.mayer, self.N, allow_large=True)

    @cached_property
    def e_family(self):
        """The factor family x -> exp(-A(x; .)) as formal series."""
        return exp_family(self.a_family, sign=-1)

    def measure(self, values):
        return MeasureVec(self.space, values)

    def _eval_rooted(self, family, q, vals, skip_order0=True):
        """sum_n (1/n!) sum_x family_n(q; x) prod nu(x) w(x) numerically."""
        w = self.space.weights
        total = 0
        for n in range(0 if not skip_order0 else 1, family.trunc + 1):
            for (root, ms), v in family.coeffs[n].items():
                if root != q or v == 0:
                    continue
                term = v
                for x in ms:
                    term = term * vals[x] * w[x]
                total += term * Fraction(1, sym_factor(ms))
        return total


# ---------------------------------------------------------------------------
# Certificates


def _require_nonneg(name, vec):
    if vec is not None and any(v < 0 for v in vec):
        raise DomainError(f"weight {name} must be non-negative")


def check_PU(st, z, a=None):
    """Pair-interaction condition on an activity: per species x,

        sum_y fbar(x, y) exp(a(y) + beta B(y)) |z|(y) w(y) <= a(x).

    With a=None a constant weight is chosen by grid search.
    """
    _require_nonneg("a", a)
    vals = [abs(v) for v in z]
    w = st.space.weights
    fbar = st.mayer.f_bar
    S = st.space.size

    def margins_for(avec):
        return tuple(
            avec[x]
            - sum(
                float(fbar[x][y])
                * math.exp(float(avec[y]) + float(st.beta_B[y]))
                * float(vals[y])
                * float(w[y])
                for y in range(S)
            )
            for x in range(S)
        )

    if a is not None:
        a = tuple(a)
        m = margins_for(a)
        return BoundCertificate("PU", all(v >= 0 for v in m), m, a=a)
    return _grid_search(
        "PU", lambda c: ((c,) * S, None), lambda ab: margins_for(ab[0])
    )


def check_Sb(st, nu, b=None):
    """Weighted absolute-coefficient condition: per root q,

        sum_{1<=n<=N} (1/n!) sum_x |A_n(q; x)| prod exp(b(x_j)) |nu|^n <= b(q).

    The left side is a partial sum through N; the certificate records that.
    """
    _require_nonneg("b", b)
    vals = [abs(float(v)) for v in nu]
    w = st.space.weights
    S = st.space.size
    A = st.a_family
    # raw per-order sums with the exp(b) factors stripped; with constant b
    # they re-enter as exp(n b)
    raw = [[0.0] * S for _ in range(st.N + 1)]
    per_ms_cache = []
    for n in range(1, st.N + 1):
        for (root, ms), v in A.coeffs[n].items():
            if v == 0:
                continue
            term = abs(float(v))
            for x in ms:
                term *= vals[x] * float(w[x])
            raw[n][root] += term / sym_factor(ms)
            per_ms_cache.append((n, root, ms, term / sym_factor(ms)))

    def margins_const(c):
        c = float(c)
        return tuple(
            c - sum(raw[n][q] * math.exp(n * c) for n in range(1, st.N + 1))
            for q in range(S)
        )

    if b is None:
        return _grid_search(
            "Sb",
            lambda c: (None, (c,) * S),
            lambda ab: margins_const(float(ab[1][0])),
            trunc=st.N,
        )
    b = tuple(b)
    sums = [0.0] * S
    for n, root, ms, base in per_ms_cache:
        boost = 1.0
        for x in ms:
            boost *= math.exp(float(b[x]))
        sums[root] += base * boost
    m = tuple(float(b[q]) - sums[q] for q in range(S))
    return BoundCertificate(
        "Sb", all(v >= 0 for v in m), m, b=b, trunc=st.N,
        notes="partial sums through the truncation order only",
    )


def check_Sab(st, nu, a=None, b=None):
    """Combined condition: per species x,

        sum_y fbar(x, y) exp(a + b + beta B + beta B*)(y) |nu|(y) w(y) <= a(x).
    """
    _require_nonneg("a", a)
    _require_nonneg("b", b)
    if a is not None and b is not None and any(
        av > bv for av, bv in zip(a, b)
    ):
        raise DomainError("combined condition needs a <= b entrywise")
    vals = [abs(float(v)) for v in nu]
    w = st.space.weights
    fbar = st.mayer.f_bar
    S = st.space.size

    def margins_for(avec, bvec):
        return tuple(
            float(avec[x])
            - sum(
                float(fbar[x][y])
                * math.exp(
                    float(avec[y])
                    + float(bvec[y])
                    + float(st.beta_B[y])
                    + float(st.beta_Bstar[y])
                )
                * vals[y]
                * float(w[y])
                for y in range(S)
            )
            for x in range(S)
        )

    if a is not None and b is not None:
        a, b = tuple(a), tuple(b)
        m = margins_for(a, b)
        return BoundCertificate("Sab", all(v >= 0 for v in m), m, a=a, b=b)
    return _grid_search(
        "Sab",
        lambda c: ((c,) * S, (c,) * S),
        lambda ab: margins_for(ab[0], ab[1]),
    )


def check_virMb(st, nu, b=None):
    """Absolute biconnected sums against a weight: per root q,

        sum_{1<=n<=N} (1/n!) sum_x |D_(n+1)(q; x)| |nu|^n <= b(q).
    """
    _require_nonneg("b", b)
    vals = [abs(float(v)) for v in nu]
    w = st.space.weights
    S = st.space.size
    D = st.d_family
    sums = [0.0] * S
    for n in range(1, st.N + 1):
        for (root, ms), v in D.coeffs[n].items():
            if v == 0:
                continue
            term = abs(float(v))
            for x in ms:
                term *= vals[x] * float(w[x])
            sums[root] += term / sym_factor(ms)
    if b is None:
        best = None
        for c in AB_GRID:
            m = tuple(float(c) - sums[q] for q in range(S))
            cert = BoundCertificate(
                "virMb", all(v >= 0 for v in m), m, b=(c,) * S, trunc=st.N
            )
            best = _better(best, cert)
        return best
    b = tuple(b)
    m = tuple(float(b[q]) - sums[q] for q in range(S))
    return BoundCertificate(
        "virMb", all(v >= 0 for v in m), m, b=b, trunc=st.N,
        notes="partial sums through the truncation order only",
        extras={"sums": tuple(sums)},
    )


def check_dissym_b(st, nu, budget):
    """Total dissymmetry mass sum_{2<=n<=N+1} ((n-1)/n!) sum |D_n| |nu|^n
    against a scalar budget (single margin).  On a finite species space the
    sum is finite for every nu; the certificate just quantifies it.
    """
    vals = [abs(float(v)) for v in nu]
    w = st.space.weights
    total = 0.0
    top = min(st.N + 1, 7)
    for n in range(2, top + 1):
        coeff = (n - 1) / math.factorial(n)
        for ms in combinations_with_replacement(range(st.space.size), n):
            v = d_coeff(st.mayer, ms)
            if v == 0:
                continue
            term = abs(float(v)) * math.factorial(n) / sym_factor(ms)
            for x in ms:
                term *= vals[x] * float(w[x])
            total += coeff * term
    m = (float(budget) - total,)
    return BoundCertificate(
        "dissym_b", m[0] >= 0, m, trunc=top,
        notes="finite on a finite species space; margin quantifies the mass",
        extras={"total": total},
    )


def _better(best, cert):
    if best is None:
        return cert
    if cert.passed and not best.passed:
        return cert
    if cert.passed == best.passed and cert.worst_margin > best.worst_margin:
        return cert
    return best


def _grid_search(condition, make_ab, margins_fn, trunc=None):
    best = None
    for c in AB_GRID:
        ab = make_ab(float(c))
        m = margins_fn(ab)
        cert = BoundCertificate(
            condition, all(v >= 0 for v in m), m, a=ab[0], b=ab[1], trunc=trunc,
            notes="constant weights chosen by grid search",
        )
        best = _better(best, cert)
    return best


# ---------------------------------------------------------------------------
# The maps


def rho_of_z(st, z):
    """Forward map: rho(q) = z(q) exp(-A(q; z)), truncated at N."""
    vals = tuple(z)
    out = []
    for q in range(st.space.size):
        a_val = st._eval_rooted(st.a_family, q, vals)
        out.append(vals[q] * _exp(-a_val))
    return MeasureVec(st.space, out)


def zeta_of_nu(st, nu, path="biconnected"):
    """Inverse map: tree path nu(q) T(q; nu), or biconnected path
    nu(q) exp(-sum (1/n!) sum D_(n+1)(q; x) nu^n).  Both truncated at N;
    they agree as formal series through order N (see zeta_path_agreement).
    """
    vals = tuple(nu)
    out = []
    if path == "tree":
        for q in range(st.space.size):
            out.append(vals[q] * eval_T(st.t_family, vals, q))
    elif path == "biconnected":
        for q in range(st.space.size):
            d_val = st._eval_rooted(st.d_family, q, vals)
            out.append(vals[q] * _exp(-d_val))
    else:
        raise DomainError("path must be 'tree' or 'biconnected'")
    return MeasureVec(st.space, out)


def zeta_path_agreement(st):
    """Coefficientwise residual between the two zeta paths through order N."""
    worst = 0
    per_order = {}
    exact = True
    for q in range(st.space.size):
        tree = _t_as_series(st.t_family, q)
        bic = exp_series(st.d_family.root_series(q, allow_large=True).scale(-1))
        for n in range(st.N + 1):
            for ms, v in tree.coeffs[n].items():
                delta = abs(v - bic.coeffs[n][ms])
                exact = exact and delta == 0
                per_order[n] = max(per_order.get(n, 0), delta)
                worst = max(worst, delta)
    return ResidualReport("zeta_path_agreement", worst, per_order, exact=exact)


def roundtrip_check(st, x=None, tol=0):
    """Residual of zeta(rho(z)) = z and rho(zeta(nu)) = nu as formal series.

    Substituting the density factor family into T must invert the activity
    factor exp(-A) and vice versa; both products are compared against the
    constant series 1.  Exact zero in rational mode.  When a measure x is
    supplied, the numeric round trip through both maps at x is reported too.
    """
    unit = FormalSeries.unit(st.space, st.N, allow_large=True)
    worst = 0
    per_order = {}
    exact = True
    for q in range(st.space.size):
        T_q = _t_as_series(st.t_family, q)
        E_q = st.e_family.root_series(q, allow_large=True)
        r1 = mul(E_q, compose_measure(T_q, st.e_family)) - unit
        r2 = mul(T_q, compose_measure(E_q, st.t_family)) - unit
        for series in (r1, r2):
            for n in range(st.N + 1):
                for ms, v in series.coeffs[n].items():
                    delta = abs(v)
                    exact = exact and delta == 0
                    per_order[n] = max(per_order.get(n, 0), delta)
                    worst = max(worst, delta)
    report = ResidualReport("roundtrip", worst, per_order, exact=exact)
    if x is not None:
        xf = [float(v) for v in x]
        echo1 = zeta_of_nu(st, rho_of_z(st, xf), path="tree")
        echo2 = rho_of_z(st, zeta_of_nu(st, xf, path="tree"))
        report.notes = (
            "numeric echo max errors: "
            f"zeta(rho)={max(abs(a - b) for a, b in zip(echo1, xf)):.3e}, "
            f"rho(zeta)={max(abs(a - b) for a, b in zip(echo2, xf)):.3e} "
            "(truncation-order effects included)"
        )
    return report


def extract_d_from_a(st):
    """Rebuild the biconnected family from A by triangular extraction.

    The activity-side identity -A(q; z) = sum (1/n!) sum D_(n+1)(q; x)
    prod_j exp(-A(x_j; z)) z^n determines D order by order: the top term of
    the composition is D_(n+1) itself since the factor family has unit
    constant term.  Returns a family in the same layout as d_family.
    """
    from .fps import RootedSeriesFamily

    S = st.space.size
    E = st.e_family
    out = RootedSeriesFamily(st.space, st.N, allow_large=True)
    ec = E.coeffs
    for q in range(S):
        F = st.a_family.root_series(q, allow_large=True).scale(-1)
        sc = out.coeffs
        for n in range(1, st.N + 1):
            for ms in canonical_indices(S, n):
                total = F.coeffs[n][ms]
                for J, blocks in compose_templates(n):
                    if len(J) == n:
                        continue
                    d_val = sc[len(J)][(q, tuple(ms[p] for p in J))]
                    if d_val == 0:
                        continue
                    term = d_val
                    for j, Vj in zip(J, blocks):
                        term = term * ec[len(Vj)][(ms[j], tuple(ms[p] for p in Vj))]
                        if term == 0:
                            break
                    total -= term
                sc[n][(q, ms)] = total
    return out


# ---------------------------------------------------------------------------
# Exact reference quantities (configuration sums)


@dataclass
class XiResult:
    value: object
    n_max: int
    truncated: bool
    by_order: list


def _pair_weight(f, ms):
    """prod over pairs inside the multiset of (1 + f); exp(-beta H) exactly."""
    total = 1
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            total = total * (1 + f[ms[i]][ms[j]])
            if total == 0:
                return 0
    return total


def _activity_products(st, z):
    w = st.space.weights
    return [z[x] * w[x] for x in range(st.space.size)]


def xi_exact(st, z, n_max=None):
    """The grand partition function by direct configuration sum.

    With a diagonal hard core every species appears at most once, the sum
    terminates at n = S, and the result is exact (rational in exact mode).
    Otherwise an explicit n_max is required and the result is flagged as
    truncated.
    """
    f = st.mayer.f
    S = st.space.size
    diag_hard = all(f[x][x] == -1 for x in range(S))
    if n_max is None:
        if not diag_hard:
            raise DomainError(
                "xi_exact terminates only under a diagonal hard core; "
                "pass n_max explicitly otherwise"
            )
        n_max = S
    zw = _activity_products(st, tuple(z))
    by_order = [1]
    if diag_hard:
        for n in range(1, n_max + 1):
            total = 0
            for sub in combinations(range(S), n):
                wgt = _pair_weight(f, sub)
                if wgt == 0:
                    continue
                for x in sub:
                    wgt = wgt * zw[x]
                total += wgt
            by_order.append(total)
    else:
        for n in range(1, n_max + 1):
            total = 0
            for ms in combinations_with_replacement(range(S), n):
                wgt = _pair_weight(f, ms)
                if wgt == 0:
                    continue
                for x in ms:
                    wgt = wgt * zw[x]
                total += wgt * Fraction(1, sym_factor(ms))
            by_order.append(total)
    return XiResult(sum(by_order), n_max, not diag_hard, by_order)


def density_exact(st, z, q=None, n_max=None):
    """One-point density by direct configuration sums:

        rho(q) = z(q) * sum_n (1/n!) sum_x exp(-beta H_(n+1)(q, x)) z^n / Xi.

    Exact under a diagonal hard core; q=None returns all species.
    """
    xi = xi_exact(st, z, n_max=n_max)
    f = st.mayer.f
    S = st.space.size
    diag_hard = all(f[x][x] == -1 for x in range(S))
    zw = _activity_products(st, tuple(z))
    roots = range(S) if q is None else (q,)
    out = []
    for root in roots:
        total = 1
        for n in range(1, xi.n_max + 1):
            if diag_hard:
                for sub in combinations(range(S), n):
                    wgt = _pair_weight(f, sub)
                    if wgt == 0:
                        continue
                    for x in sub:
                        wgt = wgt * (1 + f[root][x])
                        if wgt == 0:
                            break
                        wgt = wgt * zw[x]
                    if wgt != 0:
                        total += wgt
            else:
                for ms in combinations_with_replacement(range(S), n):
                    wgt = _pair_weight(f, ms)
                    if wgt == 0:
                        continue
                    for x in ms:
                        wgt = wgt * (1 + f[root][x]) * zw[x]
                    total += wgt * Fraction(1, sym_factor(ms))
        out.append(tuple(z)[root] * total / xi.value)
    if q is not None:
        return out[0]
    return MeasureVec(st.space, out)


# ---------------------------------------------------------------------------
# Pressure, free energy, connected sums


def log_xi_series(st, z):
    """Truncated log of the partition function: sum (1/n!) sum phi_n z^n."""
    return st.phi_series.evaluate(z)


def _d_tail_sum(st, nu, order_factor=None):
    """sum_{2<=n<=N} c_n (1/n!) sum_x D_n(x_1..x_n) nu^n over full tuples,
    with the optional per-order factor c_n = order_factor(n)."""
    vals = tuple(nu)
    w = st.space.weights
    D = st.d_family
    total = 0
    for n in range(2, st.N + 1):
        fac = 1 if order_factor is None else order_factor(n)
        for ms in canonical_indices(st.space.size, n):
            v = D.coeffs[n - 1][(ms[0], ms[1:])]
            if v == 0:
                continue
            term = fac * v
            for x in ms:
                term = term * vals[x] * w[x]
            total += term * Fraction(1, sym_factor(ms))
    return total


def pressure_of_nu(st, nu):
    """Truncated pressure functional of a density:

        sum_x nu(x) w(x) - sum_{2<=n<=N} ((n-1)/n!) sum_x D_n nu^n.

    The sign and the (n-1) weight are pinned by the Tonks equation of state
    beta p = rho/(1 - a rho).
    """
    vals = tuple(nu)
    w = st.space.weights
    ideal = sum(v * wx for v, wx in zip(vals, w))
    return ideal - _d_tail_sum(st, nu, order_factor=lambda n: n - 1)


def free_energy(st, nu, m=None):
    """Truncated free-energy functional of a non-negative density:

        sum_x nu(x) (log(nu(x)/m(x)) - 1) w(x)
        - sum_{2<=n<=N} (1/n!) sum_x D_n nu^n

    with the convention 0 log 0 = 0.  m defaults to the unit density.
    """
    vals = tuple(nu)
    if m is None:
        m = (1,) * st.space.size
    m = tuple(m)
    w = st.space.weights
    entropy = 0.0
    for x, v in enumerate(vals):
        fv = float(v)
        if fv < 0:
            raise DomainError("free energy needs a non-negative density")
        if fv == 0:
            continue
        if float(m[x]) == 0:
            raise DomainError("density has mass outside the reference measure")
        entropy += fv * (math.log(fv / float(m[x])) - 1) * float(w[x])
    return entropy - float(_d_tail_sum(st, nu))


def dissymmetry_check(st, N=None):
    """Residual of the connected-sum rearrangement identity through order N:

        phi_n = n phi_n - sum_{m=2}^{n} (m-1) sum_{|L|=m} D_m(x_L)
                * sum over assignments of the rest to owners l in L of
                  prod_l phi_(|J_l|+1)(x_(J_l), x_l).

    Exact zero in rational mode; returns the worst residual per order.
    """
    if N is None:
        N = min(st.N, 5)
    if N > st.N:
        raise DomainError("requested order exceeds the state truncation")
    if N > 5:
        raise CapabilityError("dissymmetry check supports orders n <= 5")
    phi = st.phi_series
    f = st.mayer
    worst = 0
    per_order = {}
    exact = True
    for n in range(2, N + 1):
        for ms in canonical_indices(st.space.size, n):
            lhs = phi.coeffs[n][ms]
            rhs = n * lhs
            for L, blocks in compose_templates(n):
                mlen = len(L)
                if mlen < 2:
                    continue
                d_val = d_coeff(f, tuple(ms[p] for p in L))
                if d_val == 0:
                    continue
                term = (mlen - 1) * d_val
                for owner, Jl in zip(L, blocks):
                    arg = tuple(ms[p] for p in Jl) + (ms[owner],)
                    term = term * phi.value(len(Jl) + 1, arg)
                    if term == 0:
                        break
                rhs -= term
            delta = abs(lhs - rhs)
            exact = exact and delta == 0
            per_order[n] = max(per_order.get(n, 0), delta)
            worst = max(worst, delta)
    return ResidualReport("dissymmetry", worst, per_order, exact=exact)


# ---------------------------------------------------------------------------
# JSON request interface


def _parse_scalar(v):
    if isinstance(v, str):
        num, _, den = v.partition("/")
        return Fraction(int(num), int(den or "1"))
    return v


def _parse_measure(raw):
    return [_parse_scalar(v) for v in raw]


def run_request(request):
    """Serve a JSON-style request dict:

        {"state": <species file dict or path>, "N": int,
         "op": <operation>, "inputs": {...}}

    and return a JSON-compatible response with values, certificates, and
    residuals as appropriate for the operation.
    """
    try:
        space, pot = load_species_json(request["state"])
        op = request["op"]
        N = request.get("N", 4)
        inputs = request.get("inputs", {})
    except KeyError as exc:
        raise StructureError(f"malformed request: missing {exc}") from exc
    st = GCState(space, pot=pot, N=N)
    resp = {"op": op, "N": N}
    if op == "rho_of_z":
        z = _parse_measure(inputs["z"])
        resp["values"] = [float(v) for v in rho_of_z(st, z)]
    elif op == "zeta_of_nu":
        nu = _parse_measure(inputs["nu"])
        path = inputs.get("path", "biconnected")
        resp["values"] = [float(v) for v in zeta_of_nu(st, nu, path=path)]
        resp["path"] = path
    elif op == "log_xi_series":
        resp["values"] = float(log_xi_series(st, _parse_measure(inputs["z"])))
    elif op == "pressure":
        resp["values"] = float(pressure_of_nu(st, _parse_measure(inputs["nu"])))
    elif op == "free_energy":
        resp["values"] = free_energy(
            st, _parse_measure(inputs["nu"]), inputs.get("m")
        )
    elif op == "xi_exact":
        xi = xi_exact(st, _parse_measure(inputs["z"]), n_max=inputs.get("n_max"))
        resp["values"] = float(xi.value)
        resp["truncated"] = xi.truncated
        resp["n_max"] = xi.n_max
    elif op == "density_exact":
        rho = density_exact(st, _parse_measure(inputs["z"]), n_max=inputs.get("n_max"))
        resp["values"] = [float(v) for v in rho]
    elif op == "check_PU":
        cert = check_PU(st, _parse_measure(inputs["z"]), inputs.get("a"))
        resp["certificates"] = [cert.to_dict()]
    elif op == "check_Sb":
        cert = check_Sb(st, _parse_measure(inputs["nu"]), inputs.get("b"))
        resp["certificates"] = [cert.to_dict()]
    elif op == "check_Sab":
        cert = check_Sab(
            st, _parse_measure(inputs["nu"]), inputs.get("a"), inputs.get("b")
        )
        resp["certificates"] = [cert.to_dict()]
    elif op == "roundtrip":
        resp["residuals"] = [roundtrip_check(st).to_dict()]
    elif op == "dissymmetry":
        resp["residuals"] = [dissymmetry_check(st).to_dict()]
    elif op == "zeta_paths":
        resp["residuals"] = [zeta_path_agreement(st).to_dict()]
    else:
        raise DomainError(f"unknown operation {op!r}")
    return resp
