"""Jacobi operators on the rooted binary tree and their model limits.

Vertices carry multi-index projections (the root projects to (1,1) and each
child adds a unit step); every vertex owns one child edge of each type, and
a vertex's type is the type of its parent edge. The operator rows couple a
vertex to its parent and children through square roots of the a-coefficients
with the b-coefficient on the diagonal; the model operators freeze the
coefficients at their ray-limit values. Truncations are plain restrictions
(Dirichlet), probed at machine precision.
"""

from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp
import numpy as np
from scipy import sparse

from .errors import ConvergenceError, DomainError, SourceError
from .precision import PrecisionContext, sym_eig


@dataclass(frozen=True)
class TreeIndex:
    """Finite-depth rooted binary tree with projections and type labels.

    Vertices are heap-ordered: children of v are 2v+1 (type 1) and 2v+2
    (type 2); iota[v] is the vertex type (0 for the root), proj[v] the
    multi-index projection.
    """

    depth: int
    parent: np.ndarray
    proj: np.ndarray
    iota: np.ndarray
    level: np.ndarray

    @property
    def n_vertices(self):
        return len(self.parent)

    def children(self, v):
        c1, c2 = 2 * v + 1, 2 * v + 2
        out = []
        if c1 < self.n_vertices:
            out.append((c1, 1))
        if c2 < self.n_vertices:
            out.append((c2, 2))
        return out


def build_tree(depth):
    if depth < 0:
        raise ValueError("depth must be >= 0")
    n = 2 ** (depth + 1) - 1
    parent = np.empty(n, dtype=np.int64)
    proj = np.empty((n, 2), dtype=np.int64)
    iota = np.empty(n, dtype=np.int64)
    level = np.empty(n, dtype=np.int64)
    parent[0], iota[0], level[0] = -1, 0, 0
    proj[0] = (1, 1)
    for v in range(1, n):
        p = (v - 1) // 2
        t = 1 if v % 2 == 1 else 2
        parent[v] = p
        iota[v] = t
        level[v] = level[p] + 1
        proj[v] = proj[p]
        proj[v, t - 1] += 1
    return TreeIndex(depth, parent, proj, iota, level)


# ---------------------------------------------------------------------------
# Coefficient sources
# ---------------------------------------------------------------------------

class SyntheticSource:
    """Coefficient field frozen at the ray-limit constants.

    a(n, i) = A_{c,i} and b(n, i) = B_{c,i} with c = n1/|n|; indices on the
    boundary rays use the closed-form degenerate constants. Values are cached
    per exact rational c and returned as floats (machine precision is all the
    truncation spectra can use).
    """

    def __init__(self, geometry, bits=192):
        self.geometry = geometry
        self.ctx = PrecisionContext(bits)
        self._cache = {}

    def constants(self, c):
        c = Fraction(c).limit_denominator(10 ** 12)
        hit = self._cache.get(c)
        if hit is None:
            from .curve import curve
            cd = curve(self.geometry, mp.mpf(c.numerator) / c.denominator,
                       self.ctx, with_dc=False)
            hit = tuple(float(v) for v in (cd.A1, cd.A2, cd.B1, cd.B2))
            self._cache[c] = hit
        return hit

    def _c_of(self, n):
        n1, n2 = int(n[0]), int(n[1])
        if n1 + n2 == 0:
            raise SourceError("ray fraction undefined at (0,0)")
        return Fraction(n1, n1 + n2)

    def a(self, n, i):
        A1, A2, _, _ = self.constants(self._c_of(n))
        return A1 if i == 1 else A2

    def b(self, n, i):
        _, _, B1, B2 = self.constants(self._c_of(n))
        return B1 if i == 1 else B2


class ComputedSource:
    """Coefficient field read from a recurrence table."""

    def __init__(self, table):
        self.table = table

    def _row(self, n):
        try:
            return self.table.get(tuple(n))
        except KeyError as exc:
            raise SourceError(f"table is missing index {tuple(n)}") from exc

    def a(self, n, i):
        row = self._row(n)
        return float(row[0] if i == 1 else row[1])

    def b(self, n, i):
        row = self._row(n)
        return float(row[2] if i == 1 else row[3])


class PerturbedSource:
    """Wrap a source, overriding finitely many (n, i) -> (a, b) entries."""

    def __init__(self, base, a_overrides=None, b_overrides=None):
        self.base = base
        self.a_overrides = dict(a_overrides or {})
        self.b_overrides = dict(b_overrides or {})

    def a(self, n, i):
        return self.a_overrides.get((tuple(n), i), self.base.a(n, i))

    def b(self, n, i):
        return self.b_overrides.get((tuple(n), i), self.base.b(n, i))


# ---------------------------------------------------------------------------
# Truncations
# ---------------------------------------------------------------------------

@dataclass
class TreeTruncation:
    matrix: sparse.csr_matrix
    tag: str
    depth: int

    @property
    def dim(self):
        return self.matrix.shape[0]

    def dense(self):
        return self.matrix.toarray()


def assemble_J(tree, source, kappa=(0.0, 1.0)):
    """Dirichlet truncation of the Jacobi operator for a coefficient source.

    Row of a non-root vertex: sqrt(a) to the parent at the parent's
    projection and the vertex type, the matching b on the diagonal, and
    sqrt(a) to each child at the vertex's own projection. The root diagonal
    mixes the two b's just below (1,1) through kappa.
    """
    n = tree.n_vertices
    M = sparse.lil_matrix((n, n))
    b_lo = [source.b((0, 1), 1), source.b((1, 0), 2)]
    M[0, 0] = kappa[0] * b_lo[0] + kappa[1] * b_lo[1]
    for v in range(n):
        pv = tuple(tree.proj[v])
        for child, i in tree.children(v):
            w = np.sqrt(source.a(pv, i))
            M[v, child] = w
            M[child, v] = w
            M[child, child] = source.b(pv, i)
    return TreeTruncation(M.tocsr(), "J", tree.depth)


def assemble_L(tree, c, l, curve_data):
    """Dirichlet truncation of the model operator with root diagonal B_{c,l}."""
    if l not in (1, 2):
        raise ValueError("l must be 1 or 2")
    A = (float(curve_data.A1), float(curve_data.A2))
    B = (float(curve_data.B1), float(curve_data.B2))
    n = tree.n_vertices
    M = sparse.lil_matrix((n, n))
    M[0, 0] = B[l - 1]
    for v in range(n):
        for child, i in tree.children(v):
            w = np.sqrt(A[i - 1])
            M[v, child] = w
            M[child, v] = w
            M[child, child] = B[i - 1]
    return TreeTruncation(M.tocsr(), f"L({c},{l})", tree.depth)


def spectrum_probe(truncation, intervals, epsilon, grid_step=0.01):
    """Eigenvalues of the truncation against a target union of intervals.

    Returns the eigenvalue list, the fraction inside the epsilon-fattened
    target, and the largest distance from a target grid point to the nearest
    eigenvalue.
    """
    eigs = sym_eig(truncation.dense())
    intervals = [(float(a), float(b)) for a, b in intervals]

    def dist_to_target(x):
        return min(max(a - x, 0.0, x - b) for a, b in intervals)

    inside = sum(1 for x in eigs if dist_to_target(float(x)) <= epsilon)
    gaps = []
    for a, b in intervals:
        grid = np.arange(a, b + grid_step / 2, grid_step)
        for x in grid:
            gaps.append(float(np.min(np.abs(eigs - x))))
    return {
        "eigs": eigs,
        "inside_fraction": inside / len(eigs),
        "max_coverage_gap": max(gaps),
        "epsilon": epsilon,
        "dim": truncation.dim,
        "depth": truncation.depth,
    }


def eigenvalues_csv(eigs, digits=17):
    lines = ["index,eigenvalue"]
    for k, x in enumerate(eigs):
        lines.append(f"{k},{float(x):.{digits}g}")
    return "\n".join(lines) + "\n"


def probe_report_json(report):
    import json

    return json.dumps({
        "depth": report["depth"],
        "epsilon": report["epsilon"],
        "inside_fraction": report["inside_fraction"],
        "max_coverage_gap": report["max_coverage_gap"],
    }, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# m-functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MFunctionPair:
    m1: complex
    m2: complex

    def get(self, l):
        return self.m1 if l == 1 else self.m2


def m_recursion(curve_data, l, z, iterations=600, tol=1e-12):
    """Resolvent diagonal at the root by the coupled fixed point.

    Deleting the root edges shows the two subtree resolvents solve
    m_l = 1/(B_l - A_1 m_1 - A_2 m_2 - z); iterate from (0, 0), which stays
    Herglotz at every step, until both residuals drop below tol.
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("fixed-point evaluation needs Im z > 0")
    A1, A2 = float(curve_data.A1), float(curve_data.A2)
    B1, B2 = float(curve_data.B1), float(curve_data.B2)
    m1 = m2 = 0j
    for _ in range(iterations):
        n1 = 1.0 / (B1 - A1 * m1 - A2 * m2 - z)
        n2 = 1.0 / (B2 - A1 * m1 - A2 * m2 - z)
        m1, m2 = n1, n2
        r1 = abs(m1 * (B1 - A1 * m1 - A2 * m2 - z) - 1)
        r2 = abs(m2 * (B2 - A1 * m1 - A2 * m2 - z) - 1)
        if max(r1, r2) <= tol:
            return MFunctionPair(m1, m2)
    raise ConvergenceError("fixed point did not converge; increase Im z or iterations")


def m_closed(curve_data, l, z, ctx, side=+1):
    """Closed form -1/(chi^(0)(z) - B_l) through the sheet solver."""
    from .curve import chi_eval

    if l not in (1, 2):
        raise ValueError("l must be 1 or 2")
    with ctx.workprec():
        w0 = chi_eval(curve_data, z, ctx, side=side)[0]
        B = curve_data.B1 if l == 1 else curve_data.B2
        return complex(-1 / (w0 - B))


def m_spectral_density(curve_data, l, x, ctx):
    """Im m_+(x)/pi on the support interiors (nonnegative)."""
    val = m_closed(curve_data, l, x, ctx, side=+1)
    return val.imag / np.pi


# ---------------------------------------------------------------------------
# Degenerate-ray decoupling report
# ---------------------------------------------------------------------------

def appendix_c0(geometry, ctx, depth=40):
    """Half-line decoupling of the model operator on the c = 0 boundary ray.

    With the first coefficient limit vanishing the operator splits into
    half-line blocks: one free block with spectrum [B2 - 2 sqrt(A2),
    B2 + 2 sqrt(A2)] and copies whose first diagonal entry is B1, each
    carrying a single bound state pinned at the first interval's left end.
    """
    from .curve import curve
    from .szego_maps import w_map

    g = geometry
    with ctx.workprec():
        cd = curve(g, 0, ctx)
        A2, B1, B2 = cd.A2, cd.B1, cd.B2

        def m_hat1(zz):
            return (B2 - zz + w_map(zz, g.alpha2, g.beta2)) / (2 * A2)

        def pole_eq(zz):
            return A2 * m_hat1(zz) + zz - B1

        identity_residual = abs(pole_eq(g.alpha1))
        m_hat1_at_alpha1 = m_hat1(g.alpha1)
        # locate the pole of the second block's resolvent
        from .precision import find_root
        lo = g.alpha1 - (g.beta2 - g.alpha1)
        hi = g.alpha2 - (g.alpha2 - g.beta1) / 100
        pole = find_root(pole_eq, lo, hi, ctx)

        band = (B2 - 2 * mp.sqrt(A2), B2 + 2 * mp.sqrt(A2))

    # depth-`depth` truncation of the decorated half-line block
    nA = depth + 1
    diag = np.full(nA, float(B2))
    diag[0] = float(B1)
    off = np.full(nA - 1, float(np.sqrt(float(A2))))
    M = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    eigs = sym_eig(M)
    near_pole = [x for x in eigs if abs(x - float(pole)) < 1e-3]
    band_lo, band_hi = float(band[0]), float(band[1])
    outside = [x for x in eigs
               if abs(x - float(pole)) >= 1e-3 and not (band_lo - 1e-6 <= x <= band_hi + 1e-6)]
    return {
        "identity_residual": identity_residual,
        "m_hat1_at_alpha1": m_hat1_at_alpha1,
        "pole": pole,
        "pole_error": abs(pole - g.alpha1),
        "band": band,
        "eigs": eigs,
        "n_near_pole": len(near_pole),
        "n_outside": len(outside),
        "depth": depth,
    }


# ---------------------------------------------------------------------------
# Coefficient-field limits along escaping paths
# ---------------------------------------------------------------------------

def ray_path(c, length):
    """Staircase of multi-indices from (1,1) tracking n1/|n| -> c."""
    c = float(c)
    path = [(1, 1)]
    n1, n2 = 1, 1
    for _ in range(length):
        if n1 + 1 <= c * (n1 + n2 + 1):
            n1 += 1
        else:
            n2 += 1
        path.append((n1, n2))
    return path


def _ball_vertices(word, radius):
    """Vertex words within tree distance radius of the given root-path word."""
    seen = {word}
    frontier = [word]
    for _ in range(radius):
        nxt = []
        for w in frontier:
            neighbors = [w + (1,), w + (2,)]
            if len(w) > 0:
                neighbors.append(w[:-1])
            for u in neighbors:
                if u not in seen:
                    seen.add(u)
                    nxt.append(u)
        frontier = nxt
    return seen


def _word_proj(word):
    return (1 + sum(1 for t in word if t == 1), 1 + sum(1 for t in word if t == 2))


def rlimit_check(source, c, radius, depth_schedule, target_constants):
    """Sup deviation of the coefficient field from the frozen pattern.

    Follows the staircase path for the ray parameter c; at each scheduled
    depth compares the a/b entries on the tree ball of the given radius
    against (A_{c,i}, B_{c,i}). target_constants is (A1, A2, B1, B2).
    """
    A1, A2, B1, B2 = [float(v) for v in target_constants]
    A = (A1, A2)
    B = (B1, B2)
    schedule = sorted(depth_schedule)
    path = ray_path(c, max(schedule) + radius + 1)
    deviations = []
    for d in schedule:
        # word of the path vertex at distance d from the root
        word = tuple(1 if path[k + 1][0] > path[k][0] else 2 for k in range(d))
        worst = 0.0
        for w in _ball_vertices(word, radius):
            if len(w) == 0:
                continue  # the root row has no own-type data
            i = w[-1]
            np_proj = _word_proj(w[:-1])
            da = abs(source.a(np_proj, i) - A[i - 1])
            db = abs(source.b(np_proj, i) - B[i - 1])
            worst = max(worst, da, db)
        deviations.append(worst)
    return {"depths": schedule, "deviations": deviations, "max": max(deviations)}
