import mpmath as mp
import numpy as np
import pytest

from angelesco.errors import BracketError, ShapeError, SingularSystem
from angelesco.precision import (
    PrecisionContext,
    Poly,
    find_root,
    gauss_legendre,
    integrate,
    poly_divmod,
    real_roots_in,
    solve_dense,
    sym_eig,
)

CTX = PrecisionContext(256)


def test_context_guards():
    with pytest.raises(ValueError):
        PrecisionContext(64)
    assert CTX.solve_tolerance == mp.mpf(2) ** -128


def test_gauss_legendre_small_closed_forms():
    nodes, weights = gauss_legendre(1, CTX)
    assert nodes[0] == 0 and weights[0] == 2
    nodes, weights = gauss_legendre(2, CTX)
    with CTX.workprec():
        assert abs(nodes[0] + 1 / mp.sqrt(3)) < CTX.eps * 8
        assert abs(nodes[1] - 1 / mp.sqrt(3)) < CTX.eps * 8
        assert abs(weights[0] - 1) < CTX.eps * 8 and abs(weights[1] - 1) < CTX.eps * 8


@pytest.mark.parametrize("m", [3, 7, 16, 40])
def test_gauss_legendre_weight_sum_and_ordering(m):
    nodes, weights = gauss_legendre(m, CTX)
    assert all(-1 < x < 1 for x in nodes)
    assert all(x < y for x, y in zip(nodes, nodes[1:]))
    assert all(w > 0 for w in weights)
    with CTX.workprec():
        assert abs(mp.fsum(weights) - 2) < CTX.eps * 64


def test_integrate_trivial_cases():
    one = integrate(lambda x: mp.mpf(1), (1, 2), 4, CTX)
    lin = integrate(lambda x: x, (-2, -1), 4, CTX)
    quad = integrate(lambda x: x * x, (0, 1), 2, CTX)
    with CTX.workprec():
        assert abs(one - 1) < CTX.eps * 16
        assert abs(lin + mp.mpf(3) / 2) < CTX.eps * 16
        assert abs(quad - mp.mpf(1) / 3) < CTX.eps * 16


def test_quadrature_exactness_random_polynomials():
    rng = np.random.RandomState(7)
    for m in (3, 6, 11):
        deg = 2 * m - 1
        coeffs = rng.uniform(-2, 2, size=deg + 1)
        p = Poly(coeffs)
        got = integrate(p, ("-0.5", "1.5"), m, CTX)
        with CTX.workprec():
            anti = Poly([mp.mpf(0)] + [c / (k + 1) for k, c in enumerate(p.coeffs)])
            exact = anti(mp.mpf("1.5")) - anti(mp.mpf("-0.5"))
            assert abs(got - exact) < CTX.eps * 1e6


def test_solve_dense_identity_and_diagonal():
    x, r = solve_dense([[1, 0], [0, 1]], [1, 2], CTX)
    assert x[0] == 1 and x[1] == 2 and r == 0
    x, r = solve_dense([[2, 0], [0, 4]], [2, 4], CTX)
    assert x[0] == 1 and x[1] == 1


def test_solve_dense_hilbert_known_solution():
    ctx = PrecisionContext(256)
    with ctx.workprec():
        n = 8
        A = [[mp.mpf(1) / (i + j + 1) for j in range(n)] for i in range(n)]
        b = [mp.fsum(row) for row in A]
    x, resid = solve_dense(A, b, ctx)
    with ctx.workprec():
        assert max(abs(v - 1) for v in x) < mp.mpf("1e-40")
        # reported residual consistent with a recomputation
        re2 = max(abs(mp.fsum(A[i][j] * x[j] for j in range(n)) - b[i]) for i in range(n))
        assert abs(resid - re2) <= mp.mpf("1e-30") * (1 + re2)


def test_solve_dense_singular():
    with pytest.raises(SingularSystem):
        solve_dense([[1, 1], [1, 1]], [1, 2], CTX)


def test_sym_eig_basic():
    vals = sym_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(vals, [1, 2, 3])
    vals = sym_eig(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(vals, [-1, 1])


def test_sym_eig_tridiagonal_closed_form():
    n = 12
    T = np.diag(np.ones(n - 1), 1) + np.diag(np.ones(n - 1), -1)
    vals = sym_eig(T)
    expect = np.sort(2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1)))
    assert np.allclose(vals, expect, atol=1e-12)


def test_sym_eig_trace_det_and_vectors():
    rng = np.random.RandomState(3)
    A = rng.standard_normal((40, 40))
    S = (A + A.T) / 2
    vals, vecs = sym_eig(S, want_vectors=True)
    assert abs(vals.sum() - np.trace(S)) < 1e-8 * max(1, abs(np.trace(S)))
    sign, logdet = np.linalg.slogdet(S)
    prod_sign = np.prod(np.sign(vals))
    assert prod_sign == sign
    assert abs(np.sum(np.log(np.abs(vals))) - logdet) < 1e-8 * max(1, abs(logdet))
    assert np.max(np.abs(vecs.T @ vecs - np.eye(40))) < 1e-10


def test_sym_eig_rejects_asymmetry():
    A = np.array([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(ShapeError):
        sym_eig(A)


def test_find_root_basics():
    r = find_root(lambda x: x * x - 2, 1, 2, CTX)
    with CTX.workprec():
        assert abs(r - mp.sqrt(2)) < CTX.solve_tolerance * 4
    r = find_root(lambda x: x * x - 2, 1, 2, CTX, tol=mp.mpf(2) ** -250)
    with CTX.workprec():
        assert abs(r - mp.sqrt(2)) < mp.mpf("1e-70")
    r0 = find_root(lambda x: x, -1, 1, CTX)
    assert abs(r0) < mp.mpf("1e-70")
    rc = find_root(mp.cos, 1, 2, CTX, tol=mp.mpf("1e-60"))
    with CTX.workprec():
        assert abs(rc - mp.pi / 2) < mp.mpf("1e-55")
    with pytest.raises(BracketError):
        find_root(lambda x: x * x + 1, -1, 1, CTX)


def test_poly_divmod_roundtrip():
    with CTX.workprec():
        a = Poly([1, 2, 3, 4])
        b = Poly([-1, 1])
        q, r = poly_divmod(a, b)
        chk = q * b + r
        assert max(abs(x - y) for x, y in zip(chk.coeffs, a.coeffs)) < CTX.eps * 64


def test_real_roots_with_multiplicity():
    with CTX.workprec():
        p = Poly([1, 1]) * Poly([-1, 1]) * Poly([-1, 1])  # (x+1)(x-1)^2
    roots = real_roots_in(p, (-2, 2), CTX)
    assert len(roots) == 2
    (r1, m1), (r2, m2) = roots
    assert abs(r1 + 1) < CTX.solve_tolerance * 8 and m1 == 1
    assert abs(r2 - 1) < mp.mpf("1e-30") and m2 == 2


def test_real_roots_none_and_windowed():
    assert real_roots_in(Poly([1, 0, 1]), (-10, 10), CTX) == []
    roots = real_roots_in(Poly([0, -1, 0, 1]), ("0.5", 2), CTX)  # x^3 - x
    assert len(roots) == 1
    assert abs(roots[0][0] - 1) < mp.mpf("1e-40") and roots[0][1] == 1


def test_precision_monotonicity_on_fixed_corpus():
    # doubling mantissa bits never increases the error on this corpus
    errs = {}
    for bits in (256, 512):
        ctx = PrecisionContext(bits)
        with ctx.workprec():
            n = 8
            A = [[mp.mpf(1) / (i + j + 1) for j in range(n)] for i in range(n)]
            b = [mp.fsum(row) for row in A]
            x, _ = solve_dense(A, b, ctx)
            e_solve = max(abs(v - 1) for v in x)
            p = Poly(list(range(1, 12)))
            anti = Poly([mp.mpf(0)] + [c / (k + 1) for k, c in enumerate(p.coeffs)])
            e_quad = abs(integrate(p, (0, 1), 6, ctx) - (anti(mp.mpf(1)) - anti(mp.mpf(0))))
            r = find_root(lambda t: t * t - 2, 1, 2, ctx)
            e_root = abs(r - mp.sqrt(2))
        errs[bits] = (e_solve, e_quad, e_root)
    for e512, e256 in zip(errs[512], errs[256]):
        assert e512 <= e256 * (1 + mp.mpf("1e-10")) + mp.mpf(10) ** -150
