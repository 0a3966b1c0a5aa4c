"""Single-species translation-invariant models: exact 1D oracles, Mayer
integrals, and the radius/constant bounds.

Everything here works with scalars instead of measures: the model is a
hard-core interaction in d dimensions characterized by its exclusion
distance, and the quantities of interest are the irreducible integrals

    beta_n = (1/n!) integral D_(n+1)(0, x_1..x_n) dx,

the closed-form Tonks equation of state used as an exact oracle in 1D, and
the explicit constants and radii of the convergence bounds: the tree
generating function T with T = s e^T, the chain giving 1/(2e), the constant
k = max_w (2e^-w - 1) w, and the Banach-inversion comparison with ratio 8.

Exclusion-distance convention: ``exclusion`` is always the center-to-center
distance below which two particles overlap (for spheres of radius R that is
2R).  The convention is pinned by the invariant beta_1 = -c_bar.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement, permutations, product

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import lambertw

from .errors import CapabilityError, DomainError
from .fps import sym_factor
from .graphs import d_coeff, hard_core_d_table, pair_order
from .kernels import backend_name, mc_mask_sum
from .species import MayerMatrices, SpeciesSpace

INV_2E = 1.0 / (2.0 * math.e)


def vol_ball(d, r):
    """Volume of the d-ball of radius r; exact 2r in one dimension."""
    if d == 1:
        return 2 * r
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0) * float(r) ** d


@dataclass(frozen=True)
class HomogeneousModel:
    d: int
    kind: str
    exclusion: object  # center-to-center overlap distance
    beta: float = 1.0
    B: float = 0.0
    Bstar: float = 0.0

    @classmethod
    def hard_rod(cls, a, beta=1.0, B=0.0, Bstar=0.0):
        return cls(1, "hard_rod", a, beta, B, Bstar)

    @classmethod
    def hard_sphere(cls, d=3, radius=None, exclusion=None, beta=1.0, B=0.0, Bstar=0.0):
        if (radius is None) == (exclusion is None):
            raise DomainError("give exactly one of radius or exclusion")
        if exclusion is None:
            exclusion = 2 * radius
        return cls(d, "hard_sphere", exclusion, beta, B, Bstar)

    @classmethod
    def ideal(cls, d=1):
        return cls(d, "ideal", 0)

    @property
    def c_bar(self):
        """Exclusion integral: the volume of the overlap ball."""
        return vol_ball(self.d, self.exclusion)


@dataclass
class VirialRow:
    n: int
    beta_n: object
    method: str
    stderr: float = 0.0


@dataclass
class MCEstimate:
    value: float
    stderr: float
    samples: int
    batches: int
    seed: int
    backend: str


# ---------------------------------------------------------------------------
# Tonks oracle (1D hard rods, closed form)


def _ser_mul(A, B, n_max):
    out = [Fraction(0)] * (n_max + 1)
    for i, ai in enumerate(A):
        if ai == 0 or i > n_max:
            continue
        for j, bj in enumerate(B):
            if i + j > n_max:
                break
            out[i + j] += ai * bj
    return out


def _ser_exp(A, n_max):
    """exp of a series with A[0] = 0, via E_n = (1/n) sum k A_k E_(n-k)."""
    assert A[0] == 0
    E = [Fraction(1)] + [Fraction(0)] * n_max
    for n in range(1, n_max + 1):
        acc = Fraction(0)
        for k in range(1, n + 1):
            if k < len(A) and A[k] != 0:
                acc += k * A[k] * E[n - k]
        E[n] = acc / n
    return E


def _ser_log(A, n_max):
    """log of a series with A[0] = 1, via L_n = A_n - (1/n) sum k L_k A_(n-k)."""
    assert A[0] == 1
    L = [Fraction(0)] * (n_max + 1)
    for n in range(1, n_max + 1):
        acc = n * (A[n] if n < len(A) else Fraction(0))
        for k in range(1, n):
            if n - k < len(A):
                acc -= k * L[k] * A[n - k]
        L[n] = acc / n
    return L


def tonks_beta_series(a, n_max):
    """beta_n for 1D hard rods of exclusion a, extracted mechanically as the
    order-n coefficients of -log(z(rho)/rho) from the closed-form equation
    of state (equation-of-state inversion route).  Exact rationals times a^n.
    """
    a = Fraction(a)
    geom = [a**k for k in range(n_max + 1)]                    # 1/(1 - a rho)
    arg = [Fraction(0)] + [a**k for k in range(1, n_max + 1)]  # a rho/(1-a rho)
    z_over_rho = _ser_mul(geom, _ser_exp(arg, n_max), n_max)
    L = _ser_log(z_over_rho, n_max)
    return [-L[n] for n in range(1, n_max + 1)]


def tonks_oracle(a, rho):
    """Closed-form Tonks gas at density rho: activity, pressure, free energy."""
    u = a * rho
    if not 0 <= u < 1:
        raise DomainError("Tonks gas needs 0 <= a*rho < 1")
    if rho == 0:
        return {"z": 0.0, "beta_p": 0.0, "beta_f": 0.0}
    w = u / (1 - u)
    z = rho / (1 - u) * math.exp(w)
    beta_p = rho / (1 - u)
    beta_f = rho * math.log(rho / (1 - u)) - rho
    return {"z": z, "beta_p": beta_p, "beta_f": beta_f}


# ---------------------------------------------------------------------------
# Exact 1D irreducible integrals


def _overlap_length_1d(r01, r02, r12):
    """Exact area of {|x1| < r01, |x2| < r02, |x1 - x2| < r12} in the plane.

    The inner length in x2 is piecewise linear in x1; integrating it by
    trapezoids between its breakpoints is exact.  Rational in, rational out.
    """
    r01, r02, r12 = Fraction(r01), Fraction(r02), Fraction(r12)

    def inner(x1):
        lo = max(-r02, x1 - r12)
        hi = min(r02, x1 + r12)
        return hi - lo if hi > lo else Fraction(0)

    pts = sorted(
        {
            p
            for p in (
                -r01, r01, r02 - r12, r12 - r02, r02 + r12, -r02 - r12
            )
            if -r01 <= p <= r01
        }
    )
    total = Fraction(0)
    for lo, hi in zip(pts, pts[1:]):
        total += (inner(lo) + inner(hi)) * (hi - lo) / 2
    return total


def _cells_sum(n):
    """sum over unit cells of D_(n+1) for 1D hard rods at exclusion 1.

    Write x_i = n_i + t_i with integer n_i and distinct fractional parts t_i;
    on each cell (integer parts + ordering of the t's) the overlap pattern,
    hence D, is constant: pair (0,i) overlaps iff n_i in {-1,0}; pair (i,j)
    overlaps iff n_i = n_j, or |n_i - n_j| = 1 with the fractional parts
    ordered the right way.  Each cell has volume 1/n!.
    """
    m = n + 1
    table = hard_core_d_table(m)
    pairs = pair_order(m)
    total = 0
    for nvec in product(range(-n, n), repeat=n):
        for perm in permutations(range(n)):
            rank = [0] * n
            for pos, coord in enumerate(perm):
                rank[coord] = pos
            mask = 0
            for idx, (u, v) in enumerate(pairs):
                if u == 0:
                    hit = nvec[v - 1] in (-1, 0)
                else:
                    diff = nvec[u - 1] - nvec[v - 1]
                    if diff == 0:
                        hit = True
                    elif diff == 1:
                        hit = rank[u - 1] < rank[v - 1]
                    elif diff == -1:
                        hit = rank[u - 1] > rank[v - 1]
                    else:
                        hit = False
                if hit:
                    mask |= 1 << idx
            total += int(table[mask])
    return total


def beta_n_exact_1d(a, n):
    """Exact beta_n for 1D hard rods of exclusion a, n <= 3.

    n = 1 is an interval length, n = 2 the exact piecewise area of the
    triple-overlap region, n = 3 exact unit-cell counting of D_4.
    """
    if not 1 <= n <= 3:
        raise CapabilityError("exact 1D route covers n <= 3")
    a = Fraction(a) if not isinstance(a, float) else a
    if n == 1:
        return -2 * a
    if n == 2:
        return -Fraction(1, 2) * _overlap_length_1d(1, 1, 1) * a * a
    return Fraction(_cells_sum(n), math.factorial(n) ** 2) * a**n


# ---------------------------------------------------------------------------
# Monte Carlo irreducible integrals (d = 2, 3)


def beta_n_mc(model, n, samples, seed, threads=1, batches=64):
    """MC estimate of beta_n: sample x_1..x_n uniformly in the box reachable
    by overlap chains from the pinned particle, evaluate D_(n+1) from the
    overlap pattern, and average with the volume factor.  Batch b draws from
    the counter-based substream keyed (seed, b), so a fixed seed gives
    bit-identical results for any thread count; stderr is over batch means.
    """
    if model.d not in (2, 3):
        raise DomainError("MC route covers d in {2, 3}")
    if not 1 <= n <= 3:
        raise CapabilityError("MC route covers n <= 3")
    per_batch = samples // batches
    if per_batch < 1:
        raise DomainError("need at least one sample per batch")
    m = n + 1
    table = hard_core_d_table(m)
    r_ex = float(model.exclusion)
    r2 = np.full((m, m), r_ex * r_ex)
    # in a biconnected overlap graph every vertex sits on a cycle through the
    # pinned one, so its graph distance is at most floor(m/2) overlap steps
    half = (m // 2) * r_ex
    vol_factor = (2.0 * half) ** (model.d * n)

    def run_batch(b):
        rng = np.random.Generator(np.random.Philox(key=[seed, b]))
        xs = rng.uniform(-half, half, size=(per_batch, n, model.d))
        s = mc_mask_sum(xs, r2, table)
        return vol_factor * (s / per_batch) / math.factorial(n)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(run_batch, range(batches)))
    else:
        vals = [run_batch(b) for b in range(batches)]
    arr = np.array(vals)
    return MCEstimate(
        value=float(arr.mean()),
        stderr=float(arr.std(ddof=1) / math.sqrt(batches)),
        samples=per_batch * batches,
        batches=batches,
        seed=seed,
        backend=backend_name(),
    )


def virial_table(model, n_max, samples=200_000, seed=0, threads=1):
    """Rows (n, beta_n, method, stderr) using the best route per model."""
    rows = []
    if model.kind == "ideal":
        return [VirialRow(n, 0, "analytic") for n in range(1, n_max + 1)]
    for n in range(1, n_max + 1):
        if model.d == 1:
            rows.append(VirialRow(n, beta_n_exact_1d(model.exclusion, n), "exact_1d"))
        elif n == 1:
            rows.append(VirialRow(1, -model.c_bar, "analytic"))
        else:
            est = beta_n_mc(model, n, samples, seed, threads=threads)
            rows.append(VirialRow(n, est.value, "mc", est.stderr))
    return rows


# ---------------------------------------------------------------------------
# Constants and radii


def k_constant():
    """max over w in [0,1] of (2e^-w - 1) w, located by bracketing the
    first-order condition 2e^-w (1 - w) = 1."""
    w = brentq(lambda t: 2.0 * math.exp(-t) * (1.0 - t) - 1.0, 0.0, 1.0, xtol=1e-14)
    return (2.0 * math.exp(-w) - 1.0) * w


def k_constant_closed_form():
    """Diagnostic only: the closed form (1 - W(e/2))^2 / W(e/2)."""
    W = float(lambertw(math.e / 2.0).real)
    return (1.0 - W) ** 2 / W


def r_star(model):
    """Activity radius (1/(2e)) / (c_bar e^{beta(B + B*)})."""
    cb = float(model.c_bar)
    if cb <= 0:
        raise DomainError("exclusion integral must be positive")
    return INV_2E / (cb * math.exp(model.beta * (model.B + model.Bstar)))


def r_lp(model, B_bar):
    """Previous-best activity radius k / (c_bar e^{beta B_bar})."""
    cb = float(model.c_bar)
    if cb <= 0:
        raise DomainError("exclusion integral must be positive")
    return k_constant() / (cb * math.exp(model.beta * B_bar))


def tree_fn_T(s, tol=1e-13):
    """The rooted-tree generating function: the solution of T = s e^T that
    is the sum of n^(n-1) s^n / n!, on [0, 1/e] with T(1/e) = 1.

    Newton iteration seeded by the partial series handles the interior; at
    the endpoint the Jacobian 1 - s e^T degenerates, so the last 1e-4 of the
    interval uses the expansion in p = sqrt(2(1 - e s)) instead.
    """
    if s < 0 or s > (1.0 + 1e-12) / math.e:
        raise DomainError("tree function needs 0 <= s <= 1/e")
    if s == 0:
        return 0.0
    gap = 1.0 - math.e * min(s, 1.0 / math.e)
    if gap < 1e-4:
        p = math.sqrt(max(0.0, 2.0 * gap))
        return (
            1.0
            - p
            + p**2 / 3.0
            - 11.0 * p**3 / 72.0
            + 43.0 * p**4 / 540.0
            - 769.0 * p**5 / 17280.0
            + 221.0 * p**6 / 8505.0
        )
    T = sum(n ** (n - 1) * s**n / math.factorial(n) for n in range(1, 21))
    for _ in range(60):
        g = T - s * math.exp(T)
        if abs(g) < tol:
            break
        T -= g / (1.0 - s * math.exp(T))
    return T


def tree_fn_T_bisect(s):
    """Independent oracle: solve T e^-T = s for T in [0, 1] by bracketing."""
    if s == 0:
        return 0.0
    return brentq(lambda t: t * math.exp(-t) - s, 0.0, 1.0, xtol=1e-14)


def lp_chain(model):
    """Numeric maximum of r e^{-T(c_bar r)} over (0, 1/(e c_bar)], compared
    to the closed form 1/(2e c_bar)."""
    cb = float(model.c_bar)
    if cb <= 0:
        raise DomainError("exclusion integral must be positive")
    top = 1.0 / (math.e * cb)
    res = minimize_scalar(
        lambda r: -r * math.exp(-tree_fn_T(cb * r)),
        bounds=(1e-12 * top, top),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return {
        "sup": -res.fun,
        "argmax": res.x,
        "closed_form": 1.0 / (2.0 * math.e * cb),
    }


def banach_compare(M, r_max):
    """Compare the two small-ball radii built from a modulus M:

        P  = (1/8) sup_r r e^{-M(r)}        over 0 < r <= r_max
        P' = sup_b e^{-b} sup{s : M(s e^b) <= b}   over 0 < b <= M(r_max)

    by nested bracketed maximization; returns both and the ratio P'/P.
    """
    grid = np.linspace(0.0, r_max, 33)
    vals = [float(M(r)) for r in grid]
    if abs(vals[0]) > 1e-12 or vals[-1] <= 0 or any(
        b < a - 1e-12 for a, b in zip(vals, vals[1:])
    ):
        raise DomainError("modulus must be increasing with M(0) = 0")

    res_p = minimize_scalar(
        lambda r: -r * math.exp(-float(M(r))),
        bounds=(1e-12 * r_max, r_max),
        method="bounded",
        options={"xatol": 1e-12},
    )
    P = 0.125 * (-res_p.fun)

    b_max = float(M(r_max))

    def inv_M(b):
        if b >= b_max:
            return r_max
        return brentq(lambda r: float(M(r)) - b, 0.0, r_max, xtol=1e-14)

    res_pp = minimize_scalar(
        lambda b: -math.exp(-b) * inv_M(b),
        bounds=(1e-12 * b_max, b_max),
        method="bounded",
        options={"xatol": 1e-12},
    )
    P_prime = -res_pp.fun
    return {"P": P, "P_prime": P_prime, "ratio": P_prime / P}


def banach_from_samples(rs, Ms):
    """banach_compare for a sampled modulus, interpolated linearly."""
    rs = np.asarray(rs, dtype=float)
    Ms = np.asarray(Ms, dtype=float)
    if rs.ndim != 1 or rs.shape != Ms.shape or len(rs) < 2:
        raise DomainError("need matching 1D sample arrays")
    if rs[0] != 0 or Ms[0] != 0:
        raise DomainError("samples must start at r = 0 with M(0) = 0")
    if np.any(np.diff(rs) <= 0) or np.any(np.diff(Ms) <= 0):
        raise DomainError("samples must be strictly increasing")
    return banach_compare(lambda r: np.interp(r, rs, Ms), float(rs[-1]))


def bloch_radii(R, a, M):
    """Explicit inverse-branch radii r = R^2 a/(4M), P = R^2 a^2/(8M)."""
    if R <= 0 or a <= 0 or M <= 0:
        raise DomainError("bloch_radii needs positive R, a, M")
    return {"r": R * R * a / (4.0 * M), "P": R * R * a * a / (8.0 * M)}


@dataclass
class NeighborhoodRadii:
    inner: float
    outer: float
    r_star: float
    ordered: bool  # whether inner < r_star < outer held numerically


def neighborhood_radii(model):
    """Density-side inner/outer radii around the origin:

        inner = e^{-1 - 2/e} / (c_bar e^{beta(B+B*)}),
        outer = 1/(2 sqrt e) / (c_bar e^{beta(B+B*)}).
    """
    cb = float(model.c_bar)
    if cb <= 0:
        raise DomainError("exclusion integral must be positive")
    denom = cb * math.exp(model.beta * (model.B + model.Bstar))
    inner = math.exp(-1.0 - 2.0 / math.e) / denom
    outer = 1.0 / (2.0 * math.sqrt(math.e)) / denom
    assert inner < outer
    rs = r_star(model)
    return NeighborhoodRadii(inner, outer, rs, inner < rs < outer)


def bounds_report(model, B_bar=0.0):
    """Rows (name, value, formula) for the bounds table."""
    lp = lp_chain(model)
    bc = banach_compare(lambda r: float(model.c_bar) * r, 5.0 / float(model.c_bar))
    nb = neighborhood_radii(model)
    return [
        ("k", k_constant(), "max_w (2exp(-w)-1)w"),
        ("one_over_2e", INV_2E, "1/(2e)"),
        ("r_star", r_star(model), "(1/(2e))/(cbar exp(beta(B+B*)))"),
        ("r_lp", r_lp(model, B_bar), "k/(cbar exp(beta Bbar))"),
        ("nbhd_inner", nb.inner, "exp(-1-2/e)/(cbar exp(beta(B+B*)))"),
        ("nbhd_outer", nb.outer, "(1/(2 sqrt e))/(cbar exp(beta(B+B*)))"),
        ("lp_sup", lp["sup"], "sup_r r exp(-T(cbar r))"),
        ("lp_closed_form", lp["closed_form"], "1/(2e cbar)"),
        ("banach_ratio", bc["ratio"], "P'/P for M(r) = cbar r"),
    ]


def disk_radius_refinement():
    """Hard-disk refinement of the activity radius: not implemented.

    The refinement solves the rooted fixed point G(s) = s(1 + sum_k (1/k!)
    G(s)^k g_k) where g_k are tabulated overlap-cluster integrals for disks;
    that data is not shipped here, so the general radii from bounds_report
    apply instead.
    """
    raise CapabilityError(
        "hard-disk radius refinement needs tabulated overlap-cluster data; "
        "use bounds_report for the general-potential radii"
    )


# ---------------------------------------------------------------------------
# Discretized self-test: three routes to the Tonks virial coefficients


def ring_mayer(a, k, cells=4):
    """Hard rods of exclusion a on a ring of circumference cells*a, sampled
    at k sites per exclusion length.  Sites carry weight h = a/k; overlap is
    ring-distance < a, which reduces to an exact integer comparison.
    """
    a = Fraction(a)
    S = cells * k
    h = a / k
    space = SpeciesSpace.from_weights([h] * S)
    f = [
        [-1 if min(abs(i - j), S - abs(i - j)) < k else 0 for j in range(S)]
        for i in range(S)
    ]
    return MayerMatrices.from_f(space, f, exact=True)


def grid_beta(a, k, n, cells=4):
    """beta_n on the ring grid: (1/n!) sum over grid tuples of D_(n+1) h^n,
    evaluated at the site pinned at the origin.  Exact rational; converges
    to the continuum value at first order in h = a/k.
    """
    mayer = ring_mayer(a, k, cells)
    h = Fraction(a) / k
    S = mayer.space.size
    total = Fraction(0)
    for ms in combinations_with_replacement(range(S), n):
        v = d_coeff(mayer, (0,) + ms)
        if v == 0:
            continue
        total += Fraction(v, sym_factor(ms))
    return total * h**n


def hom_inversion_selftest(model=None, N=2, grid_ks=(3, 6, 12)):
    """Check the Tonks beta_n by three routes: equation-of-state inversion
    (symbolic series), exact D-integration, and the ring-grid discretized
    inversion, reporting exact grid errors and their Richardson ratios.
    """
    if model is None:
        model = HomogeneousModel.hard_rod(1)
    if model.kind != "hard_rod" or model.d != 1:
        raise DomainError("self-test is defined for 1D hard rods")
    if N > 3:
        raise CapabilityError("exact route covers N <= 3")
    a = Fraction(model.exclusion)
    betas_eos = tonks_beta_series(a, N)
    betas_exact = [beta_n_exact_1d(a, n) for n in range(1, N + 1)]
    grid_errors = {}
    ratios = {}
    for n in range(1, N + 1):
        errs = [grid_beta(a, k, n) - betas_exact[n - 1] for k in grid_ks]
        grid_errors[n] = errs
        ratios[n] = [
            float(e1 / e2) for e1, e2 in zip(errs, errs[1:]) if e2 != 0
        ]
    rho = Fraction(1, 5) / a
    z_series = float(rho) * math.exp(
        -sum(float(b) * float(rho) ** n for n, b in enumerate(betas_eos, start=1))
    )
    z_oracle = tonks_oracle(float(a), float(rho))["z"]
    return {
        "a": a,
        "N": N,
        "betas_eos": betas_eos,
        "betas_exact": betas_exact,
        "eos_matches_exact": betas_eos == betas_exact,
        "grid_ks": tuple(grid_ks),
        "grid_errors": grid_errors,
        "richardson_ratios": ratios,
        "z_series_minus_oracle": z_series - z_oracle,
        "rows": [
            VirialRow(n, betas_eos[n - 1], "eos_inversion") for n in range(1, N + 1)
        ],
    }
