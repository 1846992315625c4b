import mpmath as mp
import numpy as np
import pytest

from angelesco.curve import curve
from angelesco.errors import DomainError, SourceError
from angelesco.mops import AngelescoSystem, lebesgue_weights, reference_geometry
from angelesco.precision import PrecisionContext
from angelesco.tree import (
    ComputedSource,
    PerturbedSource,
    SyntheticSource,
    appendix_c0,
    assemble_J,
    assemble_L,
    build_tree,
    eigenvalues_csv,
    m_closed,
    m_recursion,
    m_spectral_density,
    probe_report_json,
    ray_path,
    rlimit_check,
    spectrum_probe,
)

CTX = PrecisionContext(512)
G0 = reference_geometry()
TARGETS = [(-2, -1), (1, 2)]


@pytest.fixture(scope="module")
def cd_half():
    return curve(G0, "0.5", CTX)


@pytest.fixture(scope="module")
def synthetic():
    return SyntheticSource(G0, bits=192)


def test_build_tree_structure():
    tree = build_tree(2)
    assert tree.n_vertices == 7
    assert tuple(tree.proj[0]) == (1, 1)
    assert {tuple(tree.proj[1]), tuple(tree.proj[2])} == {(2, 1), (1, 2)}
    for v in range(3, 7):
        assert tree.proj[v].sum() == 4  # two unit steps from the root
    # every vertex owns one child edge of each type; its type matches the
    # parent edge, so each non-root vertex meets two edges of its own type
    for v in range(1, 3):
        kids = tree.children(v)
        assert [i for _, i in kids] == [1, 2]
        assert tree.iota[v] in (1, 2)


def test_assemble_L_depth1_structure(cd_half):
    tree = build_tree(1)
    L = assemble_L(tree, 0.5, 1, cd_half).dense()
    A1, A2 = float(cd_half.A1), float(cd_half.A2)
    B1, B2 = float(cd_half.B1), float(cd_half.B2)
    assert np.allclose(np.diag(L), [B1, B1, B2])
    assert np.isclose(L[0, 1], np.sqrt(A1)) and np.isclose(L[0, 2], np.sqrt(A2))
    L2 = assemble_L(tree, 0.5, 2, cd_half).dense()
    # the two model operators differ only in the root diagonal
    D = L2 - L
    assert np.count_nonzero(D) == 1 and np.isclose(D[0, 0], B2 - B1)


def test_assemble_J_root_and_symmetry(synthetic, cd_half):
    tree = build_tree(4)
    J = assemble_J(tree, synthetic).dense()
    assert np.array_equal(J, J.T)  # symmetry is exact by construction
    # default kappa weights only the second boundary coefficient
    assert np.isclose(J[0, 0], synthetic.b((1, 0), 2))
    assert (J[np.triu_indices_from(J, 1)] >= 0).all()
    assert np.isfinite(J).all()


def test_degenerate_diagonal_only_probe():
    from scipy import sparse
    from angelesco.tree import TreeTruncation

    diag = np.array([-1.5, 1.2, 1.8])
    T = TreeTruncation(sparse.csr_matrix(np.diag(diag)), "diag", 1)
    rep = spectrum_probe(T, TARGETS, 0.1)
    assert np.allclose(np.sort(diag), rep["eigs"])
    assert rep["inside_fraction"] == 1.0


def test_decoupling_on_degenerate_ray(cd_half):
    # vanishing first coefficient splits the operator into half-line blocks
    cd0 = curve(G0, 0, CTX)
    tree = build_tree(3)
    L = assemble_L(tree, 0.0, 2, cd0).dense()
    n = tree.n_vertices
    # type-1 edges carry weight 0: the root chain follows type-2 children
    adj = (np.abs(L) > 1e-14) & ~np.eye(n, dtype=bool)
    comp = []
    seen = set()
    for s in range(n):
        if s in seen:
            continue
        stack, group = [s], set()
        while stack:
            v = stack.pop()
            if v in group:
                continue
            group.add(v)
            stack.extend(np.nonzero(adj[v])[0].tolist())
        seen |= group
        comp.append(sorted(group))
    # each component is a path (half-line piece) with at most 2 neighbors
    assert all(adj[v].sum() <= 2 for v in range(n))
    root_comp = next(g for g in comp if 0 in g)
    diag_root = np.diag(L)[root_comp]
    assert np.allclose(diag_root, float(cd0.B2))  # free half-line block
    other = next(g for g in comp if 0 not in g and len(g) > 1)
    diag_other = sorted(np.diag(L)[other])
    assert np.isclose(diag_other[0], float(cd0.B1)) and np.allclose(diag_other[1:], float(cd0.B2))


def test_spectrum_probe_model_operator(cd_half):
    tree = build_tree(8)
    rep = spectrum_probe(assemble_L(tree, 0.5, 1, cd_half), TARGETS, 0.1)
    assert rep["inside_fraction"] >= 0.9
    assert rep["max_coverage_gap"] < 0.05
    doc = probe_report_json(rep)
    assert "inside_fraction" in doc
    text = eigenvalues_csv(rep["eigs"][:4])
    assert text.splitlines()[0] == "index,eigenvalue"


def test_weyl_insensitivity(synthetic, cd_half):
    overrides = {((1, 1), 1): 0.9, ((2, 1), 1): 0.8, ((1, 2), 2): 0.7}
    pert = PerturbedSource(synthetic, a_overrides=overrides)
    diffs = []
    for depth in (5, 7):
        tree = build_tree(depth)
        a = spectrum_probe(assemble_J(tree, synthetic), TARGETS, 0.1)
        b = spectrum_probe(assemble_J(tree, pert), TARGETS, 0.1)
        diffs.append(abs(a["inside_fraction"] - b["inside_fraction"]))
        # a finite-rank change moves at most rank-many eigenvalues
        assert diffs[-1] <= 14 / a["dim"]
    assert diffs[1] <= diffs[0] + 0.01


def test_m_recursion_basics(cd_half):
    class Free:
        A1 = A2 = 0.0
        B1 = B2 = 0.0

    pair = m_recursion(Free(), 1, 1j)
    assert abs(pair.m1 - 1j) < 1e-12
    zs = [complex(x, y) for x in (-1.5, 0.0, 1.5) for y in (0.4, 1.0)]
    for z in zs:
        pair = m_recursion(cd_half, 1, z)
        assert pair.m1.imag > 0 and pair.m2.imag > 0
    with pytest.raises(DomainError):
        m_recursion(cd_half, 1, complex(0, -1))


def test_m_closed_matches_recursion(cd_half):
    worst = 0.0
    for z in [complex(x, y) for x in (-2.5, -1.2, 0.3, 1.5, 3.0) for y in (0.3, 0.9)]:
        for l in (1, 2):
            worst = max(worst, abs(m_recursion(cd_half, l, z).get(l)
                                   - m_closed(cd_half, l, z, CTX)))
    assert worst < 1e-10


def test_m_density_and_mass(cd_half):
    # nonnegative density on supports, vanishing outside, total mass 1
    for x in (-1.8, -1.3, 1.3, 1.8):
        assert m_spectral_density(cd_half, 1, x, CTX) > 0
    for x in (-2.6, 0.0, 2.7):
        assert abs(m_spectral_density(cd_half, 1, x, CTX)) < 1e-12
    total = 0.0
    for (a, b) in TARGETS:
        xs, ws = np.polynomial.legendre.leggauss(120)
        # endpoint substitution x = e +- t^2 absorbs the edge behavior
        for edge, sgn in ((a, 1), (b, -1)):
            tmax = np.sqrt((b - a) / 2)
            ts = tmax * (xs + 1) / 2
            vals = [m_spectral_density(cd_half, 1, float(edge + sgn * t * t), CTX) for t in ts]
            total += float(sum(w * tmax * t * v for w, t, v in zip(ws, ts, vals)))
    assert abs(total - 1) < 1e-6


def test_fixed_point_conformal_identity(cd_half):
    # substituting the closed forms into the coupled system reproduces z
    from angelesco.curve import chi_eval
    with CTX.workprec():
        worst = mp.mpf(0)
        for z in [mp.mpc(x, y) for x in (-2, -0.5, 1, 2.5) for y in ("0.4", "1.1")]:
            w0 = chi_eval(cd_half, z, CTX)[0]
            rhs = w0 + cd_half.A1 / (w0 - cd_half.B1) + cd_half.A2 / (w0 - cd_half.B2)
            worst = max(worst, abs(rhs - z))
        assert worst < mp.mpf("1e-10")


def test_appendix_decoupling_report():
    rep = appendix_c0(G0, CTX, depth=40)
    with CTX.workprec():
        assert rep["identity_residual"] < mp.mpf("1e-12")
        assert abs(rep["m_hat1_at_alpha1"] - mp.mpf("0.2871872")) < mp.mpf("2e-6")
        assert rep["pole_error"] < mp.mpf("1e-12")
        assert abs(rep["band"][0] - 1) < mp.mpf("1e-30")
        assert abs(rep["band"][1] - 2) < mp.mpf("1e-30")
    assert rep["n_near_pole"] == 1
    assert rep["n_outside"] == 0


def test_ray_path_and_rlimit_synthetic(synthetic):
    path = ray_path(0.5, 20)
    cs = [n1 / (n1 + n2) for n1, n2 in path]
    assert abs(cs[-1] - 0.5) < 0.05
    cd = curve(G0, "0.5", CTX)
    consts = (cd.A1, cd.A2, cd.B1, cd.B2)
    # the frozen field matches its own limit pattern exactly on the plateau
    # where the constants do not depend on the ray parameter
    rep = rlimit_check(synthetic, 0.5, 1, [4, 8, 12], consts)
    assert rep["max"] < 1e-12


def test_rlimit_computed_table():
    system = AngelescoSystem(G0, lebesgue_weights(), CTX)
    table = system.table(9)
    src = ComputedSource(table)
    cd = curve(G0, "0.5", CTX)
    consts = (cd.A1, cd.A2, cd.B1, cd.B2)
    rep = rlimit_check(src, 0.5, 1, [4, 6, 8], consts)
    assert rep["deviations"][-1] < rep["deviations"][0]
    # radius 0 reduces to pointwise coefficient convergence at the path vertex
    rep0 = rlimit_check(src, 0.5, 0, [4, 8], consts)
    assert rep0["deviations"][1] < rep0["deviations"][0]
    with pytest.raises(SourceError):
        src.a((40, 40), 1)
