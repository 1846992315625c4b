"""Extended-precision kernel: quadrature, dense solves, root finding, polynomials.

Real/complex scalars are mpmath ``mpf``/``mpc`` values created under a
:class:`PrecisionContext`; every public operation wraps its arithmetic in the
context's working precision, so results are deterministic for fixed bits.
The machine-precision symmetric eigensolver lives here as well because tree
truncations never need more than double precision.
"""

import mpmath as mp
import numpy as np

from .errors import (
    BracketError,
    EvaluationError,
    ShapeError,
    SingularSystem,
)

EIG_DIM_CAP = 5000


class PrecisionContext:
    """Arithmetic context with a fixed mantissa size.

    solve_tolerance defaults to 2**(-mantissa_bits/2) and is used as the
    pivot/stop threshold by the solvers in this module.
    """

    __slots__ = ("mantissa_bits", "solve_tolerance")

    def __init__(self, mantissa_bits=512, solve_tolerance=None):
        if int(mantissa_bits) < 128:
            raise ValueError("mantissa_bits must be at least 128")
        self.mantissa_bits = int(mantissa_bits)
        with mp.workprec(self.mantissa_bits):
            if solve_tolerance is None:
                self.solve_tolerance = mp.mpf(2) ** (-self.mantissa_bits // 2)
            else:
                self.solve_tolerance = mp.mpf(solve_tolerance)

    def workprec(self):
        return mp.workprec(self.mantissa_bits)

    @property
    def eps(self):
        """Unit roundoff at context precision."""
        with self.workprec():
            return mp.mpf(2) ** (1 - self.mantissa_bits)

    def mpf(self, x):
        with self.workprec():
            return mp.mpf(x)

    def mpc(self, re, im=0):
        with self.workprec():
            return mp.mpc(re, im)

    def __repr__(self):
        return f"PrecisionContext(mantissa_bits={self.mantissa_bits})"


# ---------------------------------------------------------------------------
# Polynomials (dense, coefficients ascending)
# ---------------------------------------------------------------------------

class Poly:
    """Dense polynomial with ascending coefficients.

    The zero polynomial is represented by an empty coefficient list; otherwise
    the leading coefficient is nonzero (exact zeros are trimmed, no thresholds).
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        coeffs = [mp.mpf(c) if not isinstance(c, (mp.mpf, mp.mpc)) else c
                  for c in coeffs]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coeffs = coeffs

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __bool__(self):
        return bool(self.coeffs)

    def __call__(self, x):
        acc = mp.mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def deriv(self):
        return Poly([k * c for k, c in enumerate(self.coeffs)][1:])

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + [mp.mpf(0)] * (n - len(self.coeffs))
        b = other.coeffs + [mp.mpf(0)] * (n - len(other.coeffs))
        return Poly([x + y for x, y in zip(a, b)])

    def __sub__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + [mp.mpf(0)] * (n - len(self.coeffs))
        b = other.coeffs + [mp.mpf(0)] * (n - len(other.coeffs))
        return Poly([x - y for x, y in zip(a, b)])

    def __mul__(self, other):
        if isinstance(other, Poly):
            if not self or not other:
                return Poly([])
            out = [mp.mpf(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return Poly(out)
        return Poly([c * other for c in self.coeffs])

    __rmul__ = __mul__

    def shift_mul_x(self):
        """Return x * p(x)."""
        if not self:
            return Poly([])
        return Poly([mp.mpf(0)] + list(self.coeffs))

    def coeff(self, k):
        """Coefficient of x**k (0 outside range, including negative k)."""
        if k < 0 or k > self.degree:
            return mp.mpf(0)
        return self.coeffs[k]

    def max_abs_coeff(self):
        return max((abs(c) for c in self.coeffs), default=mp.mpf(0))

    def __repr__(self):
        return f"Poly({[mp.nstr(c, 8) for c in self.coeffs]})"


def poly_divmod(num, den):
    """Quotient and remainder of dense polynomial division."""
    if not den:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(num.coeffs)
    d = den.coeffs
    dd = len(d) - 1
    lead = d[-1]
    if len(r) - 1 < dd:
        return Poly([]), Poly(r)
    q = [mp.mpf(0)] * (len(r) - dd)
    for k in range(len(r) - 1, dd - 1, -1):
        c = r[k] / lead
        q[k - dd] = c
        if c != 0:
            for j in range(dd + 1):
                r[k - dd + j] -= c * d[j]
        r[k] = mp.mpf(0)
    return Poly(q), Poly(r[:dd])


# ---------------------------------------------------------------------------
# Gauss-Legendre quadrature
# ---------------------------------------------------------------------------

_GL_CACHE = {}


def gauss_legendre(m, ctx):
    """Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1].

    Nodes are computed by Newton iteration on the three-term Legendre
    recurrence from Chebyshev initial guesses, at full context precision.
    Returns (nodes, weights) with nodes strictly increasing.
    """
    m = int(m)
    if m < 1:
        raise ValueError("node count must be >= 1")
    key = (m, ctx.mantissa_bits)
    hit = _GL_CACHE.get(key)
    if hit is not None:
        return hit
    with mp.workprec(ctx.mantissa_bits + 20):
        if m == 1:
            nodes, weights = [mp.mpf(0)], [mp.mpf(2)]
        else:
            tol = mp.mpf(2) ** (-ctx.mantissa_bits - 10)
            nodes, weights = [], []
            for k in range(1, m + 1):
                x = mp.cos(mp.pi * (k - mp.mpf(1) / 4) / (m + mp.mpf(1) / 2))
                for _ in range(200):
                    p_prev, p = mp.mpf(1), x
                    for j in range(1, m):
                        p_prev, p = p, ((2 * j + 1) * x * p - j * p_prev) / (j + 1)
                    dp = m * (x * p - p_prev) / (x * x - 1)
                    dx = p / dp
                    x -= dx
                    if abs(dx) <= tol * (1 + abs(x)):
                        break
                p_prev, p = mp.mpf(1), x
                for j in range(1, m):
                    p_prev, p = p, ((2 * j + 1) * x * p - j * p_prev) / (j + 1)
                dp = m * (x * p - p_prev) / (x * x - 1)
                nodes.append(x)
                weights.append(2 / ((1 - x * x) * dp * dp))
            nodes.reverse()
            weights.reverse()
    with ctx.workprec():
        nodes = [+x for x in nodes]
        weights = [+w for w in weights]
    _GL_CACHE[key] = (nodes, weights)
    return nodes, weights


def integrate(f, interval, m, ctx):
    """Gauss-Legendre integral of f over [a, b] with m nodes."""
    a, b = interval
    nodes, weights = gauss_legendre(m, ctx)
    with ctx.workprec():
        a, b = mp.mpf(a), mp.mpf(b)
        half = (b - a) / 2
        mid = (b + a) / 2
        total = mp.mpf(0)
        for x, w in zip(nodes, weights):
            v = f(mid + half * x)
            if not mp.isfinite(v):
                raise EvaluationError(f"integrand not finite at x={mp.nstr(mid + half * x, 8)}")
            total += w * v
        return half * total


# ---------------------------------------------------------------------------
# Dense linear algebra
# ---------------------------------------------------------------------------

def solve_dense(A, b, ctx, pivot_tol=None):
    """Solve Ax = b by elimination with partial pivoting.

    Returns (x, residual_norm) where residual_norm = max|Ax - b| recomputed
    from the original data. Raises SingularSystem when the best available
    pivot falls below pivot_tol (default: the context solve tolerance).
    Callers with strongly graded but well-posed systems pass a smaller
    threshold and rely on the residual instead.
    """
    with ctx.workprec():
        n = len(A)
        M = [[mp.mpf(v) if not isinstance(v, (mp.mpf, mp.mpc)) else v for v in row]
             for row in A]
        if any(len(row) != n for row in M):
            raise ShapeError("matrix must be square")
        rhs = [mp.mpf(v) if not isinstance(v, (mp.mpf, mp.mpc)) else v for v in b]
        if len(rhs) != n:
            raise ShapeError("right-hand side length mismatch")
        scale = max((abs(v) for row in M for v in row), default=mp.mpf(0))
        if scale == 0:
            raise SingularSystem("zero matrix")
        if pivot_tol is None:
            pivot_tol = ctx.solve_tolerance
        work = [row[:] for row in M]
        x = rhs[:]
        perm = list(range(n))
        for k in range(n):
            piv, piv_val = k, abs(work[k][k])
            for i in range(k + 1, n):
                if abs(work[i][k]) > piv_val:
                    piv, piv_val = i, abs(work[i][k])
            if piv_val <= pivot_tol:
                raise SingularSystem(f"pivot {mp.nstr(piv_val, 5)} below tolerance at step {k}")
            if piv != k:
                work[k], work[piv] = work[piv], work[k]
                x[k], x[piv] = x[piv], x[k]
                perm[k], perm[piv] = perm[piv], perm[k]
            inv = 1 / work[k][k]
            for i in range(k + 1, n):
                f = work[i][k] * inv
                if f == 0:
                    continue
                work[i][k] = mp.mpf(0)
                for j in range(k + 1, n):
                    work[i][j] -= f * work[k][j]
                x[i] -= f * x[k]
        for k in range(n - 1, -1, -1):
            acc = x[k]
            for j in range(k + 1, n):
                acc -= work[k][j] * x[j]
            x[k] = acc / work[k][k]
        resid = mp.mpf(0)
        for i in range(n):
            r = -rhs[i]
            for j in range(n):
                r += M[i][j] * x[j]
            resid = max(resid, abs(r))
        return x, resid


def sym_eig(S, want_vectors=False, sym_tol=1e-12):
    """Eigenvalues (ascending) of a dense symmetric machine-real matrix.

    Dense Householder + implicit-shift factorization via LAPACK; dimensions
    capped at EIG_DIM_CAP. Asymmetry beyond sym_tol (relative) raises ShapeError.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ShapeError("matrix must be square")
    if S.shape[0] > EIG_DIM_CAP:
        raise ShapeError(f"dimension {S.shape[0]} exceeds cap {EIG_DIM_CAP}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if S.size and float(np.max(np.abs(S - S.T))) > sym_tol * scale:
        raise ShapeError("matrix is not symmetric within tolerance")
    Ssym = 0.5 * (S + S.T)
    if want_vectors:
        vals, vecs = np.linalg.eigh(Ssym)
        return vals, vecs
    return np.linalg.eigvalsh(Ssym)


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def find_root(f, lo, hi, ctx, tol=None):
    """Bracketed bisection/secant hybrid.

    Requires f(lo) * f(hi) < 0. Stops when |f| <= tol or the bracket width
    falls below tol (default: context solve_tolerance scaled by the bracket).
    """
    with ctx.workprec():
        a, b = mp.mpf(lo), mp.mpf(hi)
        if tol is None:
            tol = ctx.solve_tolerance * max(1, abs(a), abs(b))
        else:
            tol = mp.mpf(tol)
        fa, fb = mp.mpf(f(a)), mp.mpf(f(b))
        if fa == 0:
            return a
        if fb == 0:
            return b
        if mp.sign(fa) == mp.sign(fb):
            raise BracketError("no sign change on bracket")
        for it in range(2 * ctx.mantissa_bits + 128):
            if abs(b - a) <= tol:
                break
            xm = (a + b) / 2
            # secant candidate; every other step bisect so the bracket
            # provably halves (plain regula falsi can crawl on stiff f)
            if it % 2 == 0 and fb != fa:
                xs = b - fb * (b - a) / (fb - fa)
                x = xs if (a < xs < b) else xm
                if min(abs(x - a), abs(x - b)) < abs(b - a) * mp.mpf("1e-3"):
                    x = xm
            else:
                x = xm
            fx = mp.mpf(f(x))
            if fx == 0 or abs(fx) <= tol and abs(b - a) <= mp.sqrt(tol):
                return x
            if mp.sign(fx) == mp.sign(fa):
                a, fa = x, fx
            else:
                b, fb = x, fx
        return (a + b) / 2


# ---------------------------------------------------------------------------
# Real roots with multiplicity flags (Sturm isolation)
# ---------------------------------------------------------------------------

def _sturm_chain(p, zero_eps):
    chain = [p, p.deriv()]
    while chain[-1].degree >= 1:
        _, rem = poly_divmod(chain[-2], chain[-1])
        scale = rem.max_abs_coeff()
        if scale <= zero_eps * max(mp.mpf(1), chain[-2].max_abs_coeff()):
            break
        rem = Poly([-c / scale for c in rem.coeffs])
        chain.append(rem)
    return chain


def _sign_variations(chain, x, zero_eps):
    signs = []
    for q in chain:
        v = q(x)
        if abs(v) <= zero_eps * max(mp.mpf(1), q.max_abs_coeff()):
            continue
        signs.append(1 if v > 0 else -1)
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def real_roots_in(p, interval, ctx):
    """Sorted real roots of p in [a, b] with multiplicity flags.

    Returns a list of (root, multiplicity) pairs, multiplicity 1 or 2. Double
    roots are declared when p and p' share a refined root within sqrt of the
    solve tolerance. Intended for modest degrees (curve quartics, weight
    positivity polynomials), not for high-degree orthogonal polynomials.
    """
    with ctx.workprec():
        if not p:
            raise ValueError("zero polynomial")
        a, b = mp.mpf(interval[0]), mp.mpf(interval[1])
        zero_eps = ctx.solve_tolerance
        # peel off the gcd with p' so isolation runs on a square-free poly
        chain = _sturm_chain(p, zero_eps)
        gcd = chain[-1]
        if gcd.degree >= 1:
            psf, _ = poly_divmod(p, gcd)
        else:
            psf = p
        chain = _sturm_chain(psf, zero_eps)

        def count(lo, hi):
            return _sign_variations(chain, lo, zero_eps) - _sign_variations(chain, hi, zero_eps)

        # nudge endpoints that are themselves roots
        width = max(b - a, mp.mpf(1))
        pad = width * ctx.solve_tolerance
        roots = []
        for e in (a, b):
            if abs(psf(e)) <= zero_eps * max(mp.mpf(1), psf.max_abs_coeff()) * (1 + abs(e)) ** psf.degree:
                roots.append(e)
        lo, hi = a + pad, b - pad
        if lo < hi and count(lo, hi) > 0:
            stack = [(lo, hi, count(lo, hi))]
            while stack:
                x0, x1, k = stack.pop()
                if k == 0:
                    continue
                if k == 1:
                    f0, f1 = psf(x0), psf(x1)
                    if mp.sign(f0) != mp.sign(f1) and f0 != 0 and f1 != 0:
                        roots.append(find_root(psf, x0, x1, ctx))
                    else:
                        # rare: root of even local behavior; refine by midpoint counts
                        for _ in range(ctx.mantissa_bits):
                            xm = (x0 + x1) / 2
                            if x1 - x0 <= pad:
                                break
                            if count(x0, xm) >= 1:
                                x1 = xm
                            else:
                                x0 = xm
                        roots.append((x0 + x1) / 2)
                    continue
                xm = (x0 + x1) / 2
                kl = count(x0, xm)
                stack.append((x0, xm, kl))
                stack.append((xm, x1, k - kl))
        roots.sort()
        # merge near-identical roots (can appear from endpoint handling)
        merged = []
        for r in roots:
            if merged and abs(r - merged[-1]) <= pad * 4:
                continue
            merged.append(r)
        dp = p.deriv()
        out = []
        tol_double = mp.sqrt(ctx.solve_tolerance)
        for r in merged:
            mult = 1
            if gcd.degree >= 1 or abs(dp(r)) <= tol_double * max(mp.mpf(1), dp.max_abs_coeff()):
                if abs(dp(r)) <= tol_double * max(mp.mpf(1), dp.max_abs_coeff()):
                    mult = 2
            out.append((r, mult))
        return out
