"""Worked settings built on the inversion engine.

* grid inversion: recover an external potential from a target density on a
  finite grid, with the combined-condition certificate gating the answer;
* hard-sphere mixtures: activities from densities with exact pair integrals
  (overlap volumes) and Monte Carlo triples;
* rods with discrete orientations: truncated free-energy functional with a
  term-by-term breakdown;
* the unbounded-mixture demo: a closed-form inversion that no unweighted
  fixed-point argument covers, handled by a linear weight.

Positions/cells become species; densities are measured per unit volume and
the cell volumes enter as quadrature weights.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np
from scipy.integrate import quad

from .certs import BoundCertificate
from .errors import CapabilityError, CertificateError, DomainError, StructureError
from .fps import sym_factor
from .graphs import hard_core_d_table
from .homogeneous import INV_2E, _overlap_length_1d, vol_ball
from .inversion import AB_GRID, GCState, check_Sab
from .kernels import mc_mask_sum, mc_rod_mask_sum
from .species import PairPotential, Species, SpeciesSpace, _potential_matrix_from_kind


def _load_doc(source):
    if isinstance(source, dict):
        return source
    try:
        with open(source) as fh:
            return json.load(fh)
    except (OSError, TypeError):
        return json.loads(source)


# ---------------------------------------------------------------------------
# Grid inversion


@dataclass
class GridProfile:
    points: list          # positions (numbers in 1D, vectors beyond)
    cell_volumes: list
    rho: list             # target density per point
    z0: float = 1.0
    v_ext: list = None    # known answer, for verification only

    def __post_init__(self):
        n = len(self.points)
        if not (len(self.cell_volumes) == len(self.rho) == n):
            raise StructureError("points, cell_volumes, rho must align")
        if any(v <= 0 for v in self.cell_volumes):
            raise DomainError("cell volumes must be positive")
        if any(r < 0 for r in self.rho):
            raise DomainError("target density must be non-negative")

    @classmethod
    def from_json(cls, source):
        doc = _load_doc(source)
        return cls(
            points=doc["points"],
            cell_volumes=doc["cell_volumes"],
            rho=doc["rho"],
            z0=doc.get("z0", 1.0),
            v_ext=doc.get("v_ext"),
        )


def profile_state(gp, pot_kernel, N, beta=1.0):
    """Build the grid GCState: points become species with the cell volumes
    as quadrature weights and the pair kernel evaluated between points."""
    S = len(gp.points)
    if N >= 3 and S > 10:
        raise CapabilityError("grid inversion at N >= 3 is limited to 10 points")
    space = SpeciesSpace(
        Species(i, gp.cell_volumes[i], {"position": gp.points[i]})
        for i in range(S)
    )
    v = _potential_matrix_from_kind(space, pot_kernel["kind"], pot_kernel.get("params", {}))
    pot = PairPotential(space, beta, v)
    return GCState(space, pot=pot, N=N)


def invert_profile(gp, pot_kernel, N, beta=1.0, a=None, b=None):
    """External potential reproducing a target density on the grid:

        beta V(q) = log z0 - log rho(q)
                    + sum_{n<=N} (1/n!) sum_x D_(n+1)(q, x) rho^n

    (quadrature-weighted).  Requires the combined certificate on rho; a
    failing certificate refuses with its margins.  rho(q) = 0 gives
    V(q) = +inf.  Uniqueness holds within the certified class only.
    """
    st = profile_state(gp, pot_kernel, N, beta=beta)
    cert = check_Sab(st, gp.rho, a=a, b=b)
    if not cert.passed:
        raise CertificateError(
            "density profile fails the combined activity condition; "
            f"worst margin {cert.worst_margin:.4g}",
            certificate=cert,
        )
    log_z0 = math.log(gp.z0)
    beta_v = []
    for q in range(st.space.size):
        if gp.rho[q] == 0:
            beta_v.append(math.inf)
            continue
        tail = float(st._eval_rooted(st.d_family, q, tuple(gp.rho)))
        beta_v.append(log_z0 - math.log(float(gp.rho[q])) + tail)
    return {
        "beta_v": beta_v,
        "v_ext": [v / beta for v in beta_v],
        "certificate": cert,
        "notes": "unique within the class of potentials passing this certificate",
    }


# ---------------------------------------------------------------------------
# Hard-sphere mixtures


@dataclass
class MixtureSpec:
    radii: list
    d: int
    rho: list
    a: list = None
    b: list = None

    def __post_init__(self):
        if len(self.radii) != len(self.rho):
            raise StructureError("radii and rho must align")
        if any(r <= 0 for r in self.radii):
            raise DomainError("radii must be positive")
        if any(r < 0 for r in self.rho):
            raise DomainError("densities must be non-negative")
        if (self.a is None) != (self.b is None):
            raise StructureError("give both weight sequences or neither")
        if self.a is not None and any(
            not 0 <= ak <= bk for ak, bk in zip(self.a, self.b)
        ):
            raise DomainError("weights need b >= a >= 0")

    @classmethod
    def from_json(cls, source):
        doc = _load_doc(source)
        return cls(
            radii=doc["radii"],
            d=doc["d"],
            rho=doc["rho"],
            a=doc.get("a"),
            b=doc.get("b"),
        )


def _lens_volume(d, A, B, t):
    """Volume of the intersection of balls of radii A, B at center distance t."""
    if t >= A + B:
        return 0.0
    if t <= abs(A - B):
        return vol_ball(d, min(A, B))
    if d == 2:
        alpha = math.acos((t * t + A * A - B * B) / (2 * t * A))
        beta = math.acos((t * t + B * B - A * A) / (2 * t * B))
        tri = 0.5 * math.sqrt(
            max(0.0, (-t + A + B) * (t + A - B) * (t - A + B) * (t + A + B))
        )
        return A * A * alpha + B * B * beta - tri
    if d == 3:
        return (
            math.pi
            * (A + B - t) ** 2
            * (t * t + 2 * t * (A + B) - 3 * (A - B) ** 2)
            / (12 * t)
        )
    raise CapabilityError("lens volumes implemented for d in {2, 3}")


def triangle_integral(d, r01, r02, r12):
    """vol{ |x1| < r01, |x2| < r02, |x1 - x2| < r12 } in (R^d)^2.

    Exact piecewise rational in one dimension; radial quadrature over lens
    volumes in two and three.
    """
    if d == 1:
        return _overlap_length_1d(r01, r02, r12)
    surf = (lambda t: 2 * math.pi * t) if d == 2 else (lambda t: 4 * math.pi * t * t)
    if d not in (2, 3):
        raise CapabilityError("triangle integrals implemented for d <= 3")
    breaks = sorted(
        {p for p in (abs(r02 - r12), r02 + r12) if 0 < p < r01}
    )
    val, _ = quad(
        lambda t: surf(t) * _lens_volume(d, r02, r12, t),
        0.0,
        r01,
        points=breaks or None,
        limit=200,
    )
    return val


def _mixture_margins(ms, a, b):
    K = len(ms.radii)
    return tuple(
        float(a[k])
        - sum(
            float(ms.rho[l])
            * vol_ball(ms.d, ms.radii[k] + ms.radii[l])
            * math.exp(float(a[l]) + float(b[l]))
            for l in range(K)
        )
        for k in range(K)
    )


def _mixture_cert(ms):
    if ms.a is not None:
        m = _mixture_margins(ms, ms.a, ms.b)
        return BoundCertificate("mix_ab", all(v >= 0 for v in m), m, a=tuple(ms.a), b=tuple(ms.b))
    best = None
    for c in AB_GRID:
        const = (float(c),) * len(ms.radii)
        m = _mixture_margins(ms, const, const)
        cert = BoundCertificate(
            "mix_ab", all(v >= 0 for v in m), m, a=const, b=const,
            notes="constant weights chosen by grid search",
        )
        if best is None or (cert.passed, cert.worst_margin) > (best.passed, best.worst_margin):
            best = cert
    return best


def _mc_mixture_triple(ms, k, combo, samples, seed, stream, threads, batches=32):
    """MC estimate of integral of D_4(0^(k), x^(l1), x^(l2), x^(l3))."""
    radii = ms.radii
    specs = (k,) + combo
    m = 4
    table = hard_core_d_table(m)
    r2 = np.array(
        [[(radii[u] + radii[v]) ** 2 for v in specs] for u in specs], dtype=float
    )
    rmax = max(radii[u] + radii[v] for u in specs for v in specs)
    half = 3.0 * rmax
    vol_factor = (2.0 * half) ** (ms.d * 3)
    per_batch = max(samples // batches, 1)

    def run_batch(bi):
        rng = np.random.Generator(np.random.Philox(key=[seed, stream * 1000 + bi]))
        xs = rng.uniform(-half, half, size=(per_batch, 3, ms.d))
        return vol_factor * (mc_mask_sum(xs, r2, table) / per_batch)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(run_batch, range(batches)))
    else:
        vals = [run_batch(bi) for bi in range(batches)]
    arr = np.array(vals)
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(batches))


def invert_mixture(ms, N, samples=100_000, seed=0, threads=1):
    """Activities z_k of a hard-sphere mixture from target densities:

        log(z_k / rho_k) = -sum_{n<=N} (1/n!) sum_l I_n(k; l) rho_l...

    with the spatial integrals exact for n <= 2 (overlap and triangle
    volumes) and Monte Carlo for n = 3.  Refuses when the mixture activity
    condition fails, reporting per-species margins.
    """
    if N > 3:
        raise CapabilityError("mixture integrals implemented through order 3")
    cert = _mixture_cert(ms)
    if not cert.passed:
        raise CertificateError(
            "mixture densities fail the activity condition; "
            f"worst margin {cert.worst_margin:.4g}",
            certificate=cert,
        )
    K = len(ms.radii)
    radii = ms.radii
    rho = ms.rho
    mc_rows = []
    out = []
    stream = 0
    for k in range(K):
        log_ratio = 0.0
        if N >= 1:
            log_ratio -= sum(
                -vol_ball(ms.d, radii[k] + radii[l]) * float(rho[l]) for l in range(K)
            )
        if N >= 2:
            for combo in combinations_with_replacement(range(K), 2):
                i2 = -triangle_integral(
                    ms.d,
                    radii[k] + radii[combo[0]],
                    radii[k] + radii[combo[1]],
                    radii[combo[0]] + radii[combo[1]],
                )
                term = float(i2)
                for l in combo:
                    term *= float(rho[l])
                log_ratio -= term / sym_factor(combo)
        if N >= 3:
            for combo in combinations_with_replacement(range(K), 3):
                est, err = _mc_mixture_triple(
                    ms, k, combo, samples, seed, stream, threads
                )
                stream += 1
                term = est
                for l in combo:
                    term *= float(rho[l])
                log_ratio -= term / sym_factor(combo)
                mc_rows.append((k, combo, est, err))
        out.append(float(rho[k]) * math.exp(log_ratio))
    return {"z": out, "certificate": cert, "mc_integrals": mc_rows}


# ---------------------------------------------------------------------------
# Rods with discrete orientations


@dataclass
class RodSystem:
    rho0: float
    length: float
    angles: list
    probs: list

    def __post_init__(self):
        if len(self.angles) != len(self.probs):
            raise StructureError("angles and probs must align")
        if any(p < 0 for p in self.probs):
            raise DomainError("orientation probabilities must be non-negative")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise DomainError("orientation probabilities must sum to 1")
        if self.rho0 < 0 or self.length <= 0:
            raise DomainError("need rho0 >= 0 and positive length")

    @classmethod
    def from_json(cls, source):
        doc = _load_doc(source)
        return cls(
            rho0=doc["rho0"],
            length=doc["length"],
            angles=doc["angles"],
            probs=doc["probs"],
        )


def rod_excluded_area(L, gamma):
    """Excluded area of two thin rods of length L at relative angle gamma."""
    return L * L * abs(math.sin(gamma))


def rod_excluded_area_mc(L, gamma, samples=200_000, seed=0, batches=32):
    """MC check of the excluded area: fraction of center displacements in
    [-L, L]^2 for which the two segments intersect, times the box area."""
    angles = np.array([0.0, gamma])
    table = np.array([0, 1], dtype=np.int64)
    per_batch = max(samples // batches, 1)
    vals = []
    for bi in range(batches):
        rng = np.random.Generator(np.random.Philox(key=[seed, bi]))
        centers = rng.uniform(-L, L, size=(per_batch, 1, 2))
        hits = mc_rod_mask_sum(centers, angles, L, table)
        vals.append((2.0 * L) ** 2 * hits / per_batch)
    arr = np.array(vals)
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(batches))


def rods_free_energy(rs, N=2, samples=100_000, seed=0, threads=1):
    """Truncated free energy per volume of thin rods at overall density rho0
    with discrete orientation probabilities:

        ideal + orientation entropy
        - sum_{2<=n<=N} (rho0^n / n!) sum over orientation tuples of
          (spatial integral of D_n) prod p

    The pair term uses the exact excluded area; the triple term is MC.
    Refuses when rho0 sup_sigma sum_tau p(tau) excl(sigma,tau) > 1/(2e).
    """
    if N > 3:
        raise CapabilityError("rod free energy implemented through order 3")
    L = rs.length
    worst = max(
        sum(
            p * rod_excluded_area(L, a1 - a2)
            for a2, p in zip(rs.angles, rs.probs)
        )
        for a1 in rs.angles
    )
    margin = INV_2E - rs.rho0 * worst
    cert = BoundCertificate("rod_2e", margin >= 0, (margin,), extras={"sup": worst})
    if not cert.passed:
        raise CertificateError(
            f"rho0 violates the 1/(2e) rod condition by {-margin:.4g}",
            certificate=cert,
        )
    rho0 = rs.rho0
    ideal = rho0 * (math.log(rho0) - 1.0) if rho0 > 0 else 0.0
    entropy = rho0 * sum(p * math.log(p) for p in rs.probs if p > 0)
    terms = {"ideal": ideal, "orientation_entropy": entropy}
    if N >= 2:
        pair = 0.0
        for s, ps in zip(rs.angles, rs.probs):
            for t, pt in zip(rs.angles, rs.probs):
                pair += ps * pt * rod_excluded_area(L, s - t)
        terms["order2"] = 0.5 * rho0 * rho0 * pair
    if N >= 3:
        table = hard_core_d_table(3)
        total = 0.0
        err_acc = 0.0
        batches = 32
        per_batch = max(samples // batches, 1)
        half = 2.0 * L
        vol_factor = (2.0 * half) ** 4
        stream = 0
        for combo in combinations_with_replacement(range(len(rs.angles)), 3):
            angles = np.array([rs.angles[i] for i in combo])

            def run_batch(bi, angles=angles, stream=stream):
                rng = np.random.Generator(
                    np.random.Philox(key=[seed, stream * 1000 + bi])
                )
                centers = rng.uniform(-half, half, size=(per_batch, 2, 2))
                return vol_factor * (
                    mc_rod_mask_sum(centers, angles, L, table) / per_batch
                )

            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as ex:
                    vals = list(ex.map(run_batch, range(batches)))
            else:
                vals = [run_batch(bi) for bi in range(batches)]
            arr = np.array(vals)
            pw = 1.0
            for i in combo:
                pw *= rs.probs[i]
            weight = pw / sym_factor(combo)
            total += float(arr.mean()) * weight
            err_acc += (float(arr.std(ddof=1) / math.sqrt(batches)) * abs(weight)) ** 2
            stream += 1
        terms["order3"] = -(rho0**3) * total
        terms["order3_stderr"] = rho0**3 * math.sqrt(err_acc)
    total = sum(v for kk, v in terms.items() if not kk.endswith("_stderr"))
    return {"terms": terms, "total": total, "certificate": cert}


# ---------------------------------------------------------------------------
# Unbounded-mixture demo


def unbounded_mixture_demo(K=3, z1=-0.1, weight_slope=1.0, z_tail=1.0):
    """A countable mixture where activity and density stay close in no
    unweighted norm: the closed-form map

        rho_1 = z_1,   rho_k = z_k exp(-k z_1)   (k >= 2)

    has exact inverse z_k = rho_k exp(k rho_1), and a z_1 < 0 perturbation
    makes |rho_k / z_k| = exp(k |z_1|) grow without bound in k.  A linear
    weight b(k) = c k restores control: |log(rho_k/z_k)| = k|z_1| <= b(k)
    whenever c >= |z_1|.  Returns the table, the weighted-norm margins, and
    a narrative summary.
    """
    z = [z1] + [z_tail] * (K - 1)
    rho = [z[0]] + [z[k] * math.exp(-(k + 1) * z[0]) for k in range(1, K)]
    z_back = [rho[0]] + [rho[k] * math.exp((k + 1) * rho[0]) for k in range(1, K)]
    rows = []
    for k in range(K):
        ratio = abs(rho[k] / z[k]) if z[k] != 0 else float("nan")
        rows.append(
            {"k": k + 1, "z": z[k], "rho": rho[k], "ratio": ratio, "z_back": z_back[k]}
        )
    margins = tuple(
        weight_slope * (k + 1) - (k + 1) * abs(z1) for k in range(K)
    )
    cert = BoundCertificate(
        "weighted_b", all(m >= 0 for m in margins), margins,
        b=tuple(weight_slope * (k + 1) for k in range(K)),
        notes="b(k) = c k with c = %g" % weight_slope,
    )
    narrative = (
        "The component ratios |rho_k/z_k| = exp(k|z_1|) grow without bound, "
        "so no inversion theorem stated in an unweighted sup or l1 norm can "
        "cover this map; the linear weight b(k) = c k turns the same "
        "distortion into the uniform bound |log(rho_k/z_k)| <= b(k), which "
        "is the form the weighted certificates use."
    )
    roundtrip = max(abs(a - b) for a, b in zip(z, z_back))
    return {
        "rows": rows,
        "certificate": cert,
        "roundtrip_error": roundtrip,
        "narrative": narrative,
    }
