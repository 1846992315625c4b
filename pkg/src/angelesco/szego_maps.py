"""Closed-form square-root and exterior conformal maps of a single interval.

w(z) = sqrt((z - a)(z - b)) with w(z)/z -> 1 at infinity, holomorphic off
[a, b]; phi(z) = (z - (a+b)/2 + w(z))/2 maps the complement of [a, b] onto
the outside of the disk of radius (b - a)/4 and behaves like z at infinity.
Both run at the ambient mpmath precision; callers set the working context.
"""

import mpmath as mp


def w_map(z, a, b, side=0):
    """sqrt((z-a)(z-b)), branch fixed by w(z)/z -> 1 as z -> infinity.

    For real z strictly inside (a, b), pass side=+1 or -1 for the boundary
    value from the upper or lower half-plane: +- i sqrt((x-a)(b-x)).
    """
    a, b = mp.mpf(a), mp.mpf(b)
    z = mp.mpc(z)
    if z.imag == 0:
        x = z.real
        if a < x < b:
            if side == 0:
                raise ValueError("on-cut evaluation needs a side flag")
            return mp.mpc(0, side) * mp.sqrt((x - a) * (b - x))
        v = mp.sqrt(abs(x - a)) * mp.sqrt(abs(x - b))
        return -v if x <= a else v
    # principal square roots of both factors: the cuts off (-inf, a] and
    # (-inf, b] cancel on their overlap, leaving [a, b] only
    return mp.sqrt(z - a) * mp.sqrt(z - b)


def phi_map(z, a, b, side=0):
    """Exterior conformal map (z - midpoint + w(z))/2 of the complement of [a, b]."""
    a, b = mp.mpf(a), mp.mpf(b)
    w = w_map(z, a, b, side=side)
    zz = mp.mpc(z)
    val = (zz - (a + b) / 2 + w) / 2
    if zz.imag == 0 and not (a < zz.real < b):
        return val.real
    return val
