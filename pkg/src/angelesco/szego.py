"""Single-interval Szego machinery and the fully-marginal predictor.

The Szego function of an analytic positive density rho on [a, b] is built
from two pieces: a quadrature of the smooth part of log(rho |w_+|) against
the Cauchy kernel (after the substitution x = midpoint + halflength cos
theta, which absorbs the edge singularity exactly), and a closed form for
the log-sin part, exp(-(w/2pi) I) with I = -(pi/w) log(2 phi / w).
Boundary values use the Glauert principal value (the PV of the bare kernel
over the angle variable vanishes) plus the explicit half-residue.
"""

from dataclasses import dataclass

import mpmath as mp

from .errors import DomainError
from .precision import gauss_legendre
from .szego_maps import phi_map as _phi_ab
from .szego_maps import w_map as _w_ab


@dataclass(frozen=True)
class SzegoEval:
    interval: int
    value: mp.mpc
    at_infinity: mp.mpc


def w_map(geometry, i, z, ctx, side=0):
    """w_i(z) = sqrt((z - alpha_i)(z - beta_i)), w_i(z)/z -> 1 at infinity."""
    with ctx.workprec():
        a, b = geometry.interval(i)
        return _w_ab(z, a, b, side=side)


def phi_map(geometry, i, z, ctx, side=0):
    """Conformal map of the complement of interval i onto |w| > (b-a)/4."""
    with ctx.workprec():
        a, b = geometry.interval(i)
        return _phi_ab(z, a, b, side=side)


def _log_density(weight, x):
    """log(2 pi mu'(x) * halflength) split off the log-sin part upstream."""
    return mp.log(2 * mp.pi * weight.density(x))


def szego_rho(geometry, i, z, weight, ctx, n_theta=256, side=0):
    """Szego function of the density of measure i, holomorphic off its interval.

    Characterized by S_+ S_- rho w_+ = 1 on the open interval together with
    fourth-root blowup at the endpoints; all integrands are kept real by
    using the positivity of (rho w_+).
    """
    if weight.interval != i:
        raise ValueError("weight does not belong to interval i")
    with ctx.workprec():
        a, b = geometry.interval(i)
        half = (b - a) / 2
        mid = (b + a) / 2
        zc = mp.mpc(z)
        on_axis = zc.imag == 0
        near = abs(zc.imag) < (b - a) * mp.mpf("1e-3") and a < zc.real < b
        if on_axis and a <= zc.real <= b and side == 0:
            raise DomainError("on-cut evaluation needs a side flag")
        nodes, gl_w = gauss_legendre(n_theta, ctx)
        thetas = [(t + 1) * mp.pi / 2 for t in nodes]
        xs = [mid + half * mp.cos(th) for th in thetas]
        fs = [_log_density(weight, x) + mp.log(half) for x in xs]
        s_inf = mp.exp(-(mp.pi / 2 * mp.fsum(w * f for w, f in zip(gl_w, fs))
                         - mp.pi * mp.log(2)) / (2 * mp.pi))
        if near or (on_axis and a < zc.real < b):
            x0 = zc.real
            use_side = side if side else (1 if zc.imag > 0 else -1)
            th0 = mp.acos((x0 - mid) / half)
            f0 = _log_density(weight, x0) + mp.log(half)
            # PV of the bare kernel over theta vanishes, so subtract f(th0);
            # the pole crosses below the contour, hence the minus half-residue
            pv = mp.fsum(w * (f - f0) / (x0 - x)
                         for w, f, x in zip(gl_w, fs, xs)) * mp.pi / 2
            J = pv - mp.mpc(0, use_side) * mp.pi * f0 / (half * mp.sin(th0))
            wv = _w_ab(x0, a, b, side=use_side)
            phv = _phi_ab(x0, a, b, side=use_side)
            I = -(mp.pi / wv) * mp.log(2 * phv / wv)
            return SzegoEval(i, mp.exp(-(wv / (2 * mp.pi)) * (J + I)), s_inf)
        J = mp.fsum(w * f / (zc - x) for w, f, x in zip(gl_w, fs, xs)) * mp.pi / 2
        wv = _w_ab(zc, a, b)
        phv = _phi_ab(zc, a, b)
        I = -(mp.pi / wv) * mp.log(2 * phv / wv)
        val = mp.exp(-(wv / (2 * mp.pi)) * (J + I))
        return SzegoEval(i, val, s_inf)


def s_x0(geometry, z, x0, ctx, side=0):
    """The closed-form Szego factor attached to a first-interval zero at x0.

    Normalized to 1 at infinity; on the second interval its boundary modulus
    satisfies |S_+-|^2 = -phi_2(x0) / (x - x0).
    """
    with ctx.workprec():
        a, b = geometry.interval(2)
        x0 = mp.mpf(x0)
        if a <= x0 <= b:
            raise DomainError("x0 must lie outside the second interval")
        zc = mp.mpc(z)
        if zc.imag == 0 and a <= zc.real <= b and side == 0:
            raise DomainError("on-cut evaluation needs a side flag")
        A02 = ((b - a) / 4) ** 2
        ph0 = _phi_ab(x0, a, b)
        ph = _phi_ab(zc.real if zc.imag == 0 else zc, a, b, side=side)
        expr = ((ph - ph0) / (ph0 * ph - A02)) * (ph0 * ph / (zc - x0))
        val = mp.sqrt(expr)
        # branch: the expression tends to 1 at infinity and stays off the
        # negative reals for the evaluation regions used here
        if mp.re(val) < 0:
            val = -val
        return val


def marginal_predict(n, z, weight2, geometry, ctx, n_theta=256):
    """Size prediction for the monic polynomial along a thin-first-component ray.

    (S_rho2(z)/S_rho2(inf)) * S(z; alpha1)^n1 * (z - alpha1)^n1 * phi_2(z)^n2,
    each factor normalized so the product behaves like z^|n| at infinity.
    """
    with ctx.workprec():
        a2, b2 = geometry.interval(2)
        zc = mp.mpc(z)
        if zc.imag == 0 and (a2 <= zc.real <= b2 or zc.real == geometry.alpha1):
            raise DomainError("evaluation point must avoid the second interval "
                              "and the collapsed first support")
        se = szego_rho(geometry, 2, z, weight2, ctx, n_theta=n_theta)
        sfac = s_x0(geometry, z, geometry.alpha1, ctx)
        phi2 = _phi_ab(zc, a2, b2)
        return (se.value / se.at_infinity) * sfac ** n.n1 \
            * (zc - geometry.alpha1) ** n.n1 * phi2 ** n.n2


def ratio_report(system, n_list, z, n_theta=256):
    """|P_n(z)/prediction| rows for a list of multi-indices."""
    rows = []
    ctx = system.ctx
    with ctx.workprec():
        zc = mp.mpc(z)
        for n in n_list:
            sol = system.solution(n)
            pred = marginal_predict(sol.index, zc, system.weights[1],
                                    system.geometry, ctx, n_theta=n_theta)
            ratio = sol.p_monic(zc) / pred
            rows.append({
                "n1": sol.index.n1,
                "n2": sol.index.n2,
                "z_re": zc.real,
                "z_im": zc.imag,
                "ratio_re": ratio.real,
                "ratio_im": ratio.imag,
                "abs_err": abs(ratio - 1),
            })
    return rows


def ratio_report_csv(rows, digits=20):
    header = "n1,n2,z_re,z_im,ratio_re,ratio_im,abs_err"
    lines = [header]
    for r in rows:
        lines.append(",".join([str(r["n1"]), str(r["n2"])] +
                              [mp.nstr(r[k], digits) for k in
                               ("z_re", "z_im", "ratio_re", "ratio_im", "abs_err")]))
    return "\n".join(lines) + "\n"
