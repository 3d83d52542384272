"""Independent reference values for the Rust test suite.

Everything here uses mpmath / scipy adaptive quadrature (QUADPACK) in
coordinates chosen per integral, so it shares no code path with the crate.

Run: python3 -u tools/oracles.py [section ...]
"""
import math
import sys

import numpy as np
from mpmath import mp, mpf, gamma as mgamma, pi as mpi, quad as mquad, inf as minf
from scipy import integrate

mp.dps = 30
TAU = 2 * math.pi


def bump(r):
    return math.exp(-1.0 / (1.0 - r * r)) if r < 1.0 else 0.0


def bump_grad(r):
    if r >= 1.0:
        return 0.0
    q = 1.0 - r * r
    return math.exp(-1.0 / q) * 2.0 * r / (q * q)


def quad(f, a, b, **kw):
    kw.setdefault("epsabs", 1e-13)
    kw.setdefault("epsrel", 1e-10)
    kw.setdefault("limit", 400)
    return integrate.quad(f, a, b, **kw)[0]


def polar(x, g, rmax, rmin=0.0, eps=1e-9):
    """int_{rmin<|y-x|<rmax} g(y, r, theta) dy in polar coordinates about x."""
    def ang(r):
        return quad(lambda th: g(x[0] + r * math.cos(th), x[1] + r * math.sin(th), r, th), 0.0, TAU, epsrel=eps) * r
    return quad(ang, rmin, rmax, epsrel=eps)


def constants():
    print("gamma(0.3) =", mp.nstr(mgamma(mpf("0.3")), 20))
    for a in ("0.5", "0.25", "0.75", "0.9999"):
        a = mpf(a)
        c = (1 - a) * mpi ** mpf("0.5") * mgamma((1 - a) / 2) * mgamma(a / 2) * mgamma(mpf("0.5")) / (
            a * mgamma((1 + a) / 2) * mgamma((2 - a) / 2))
        print("bbm(%s,2) =" % a, mp.nstr(c, 20), "gap", mp.nstr(c - 2 * mpi, 10))


def beta():
    # 1-D, a1 = a2 = 0.75, x1 = 0, x2 = 1, straight tanh-sinh over the line
    a1 = a2 = mpf("0.75")
    val = mquad(lambda t: abs(t) ** -a1 * abs(t - 1) ** -a2, [-minf, 0, 1, minf])
    print("beta1d(0.75,0.75) quad =", mp.nstr(val, 15))

    # 2-D, a1 = a2 = 1.5, |x1 - x2| = 1, polar about x1; the angular integral
    # of (1 - 2 rho cos p + rho^2)^{-b} over the circle is 2 pi 2F1(b, b; 1; rho^2)
    b = mpf("0.75")

    def ang(r):
        if r < 1:
            return 2 * mpi * mp.hyp2f1(b, b, 1, r * r)
        return r ** (-2 * b) * 2 * mpi * mp.hyp2f1(b, b, 1, 1 / (r * r))
    b2 = mquad(lambda r: r ** mpf("-0.5") * ang(r), [0, mpf("0.5"), 1, 2, 8, 64, minf])
    print("beta2d(1.5,1.5) quad =", mp.nstr(b2, 12))


def riesz():
    x = (0.3, 0.0)
    i1 = polar(x, lambda a, b, r, th: bump(math.hypot(a, b)) / r, 1.3)
    print("I_1 bump (0.3,0) =", repr(i1))
    ih = polar(x, lambda a, b, r, th: r ** -0.5 * bump(math.hypot(a, b)), 1.3)
    print("I_1.5 bump (0.3,0) =", repr(ih))


def frac():
    f0 = bump(0.0)
    outer = TAU * f0 / 0.5
    inner = quad(lambda r: TAU * abs(f0 - bump(r)) * r ** -1.5, 0, 1, epsrel=1e-12)
    print("D^0.5 bump centre =", repr(inner + outer))
    inner_cut = quad(lambda r: TAU * abs(f0 - bump(r)) * r ** -1.5, 1e-6, 1, epsrel=1e-12)
    print("D^0.5 bump centre (eps=1e-6) =", repr(inner_cut + outer))
    xo = (0.3, 0.2)
    fx = bump(math.hypot(*xo))
    near = polar(xo, lambda a, b, r, th: abs(fx - bump(math.hypot(a, b))) * r ** -2.5, 1.5)
    far = TAU * fx / 0.5 * 1.5 ** -0.5
    print("D^0.5 bump (0.3,0.2) =", repr(near + far))


def ball_mass(c, r):
    # polar about the pole (origin): |y| = rho, the ball is {rho^2 - 2 rho d cos + d^2 < r^2}
    d = math.hypot(*c)

    def arc(rho):
        if rho <= r - d:
            return TAU
        if rho >= r + d or rho <= d - r:
            return 0.0
        cosv = (rho * rho + d * d - r * r) / (2 * rho * d)
        return 2 * math.acos(max(-1.0, min(1.0, cosv)))
    pts = sorted({abs(d - r), d + r})
    return quad(lambda rho: rho ** 0.5 * arc(rho), 0.0, d + r, points=pts, epsrel=1e-12)


def weights():
    for r in (0.7, 0.2):
        print("ball_mass(|y|^-1/2, (0.3,0.2), %s) =" % r, repr(ball_mass((0.3, 0.2), r)))
    xo = (0.3, 0.2)

    def tw(a, b, r, th):
        ny = math.hypot(a, b)
        return r / ball_mass(xo, r) * bump_grad(ny) * ny ** -0.5
    print("T_w |grad f| (0.3,0.2), w=|y|^-1/2 =", repr(polar(xo, tw, 1.4, eps=1e-7)))

    pole = (0.2, 0.1)
    v = polar(pole, lambda a, b, r, th: r ** -0.5 * bump(math.hypot(a, b)) ** 2, 1.3)
    print("||bump||_{L^2(w)} pole (0.2,0.1) =", repr(math.sqrt(v)))


def rough():
    xm = (0.4, 0.0)

    def trunc(t):
        return polar(xm, lambda a, b, r, th: math.cos(th) / r ** 2 * bump(math.hypot(xm[0] - r * math.cos(th), xm[1] - r * math.sin(th))),
                     1.4, rmin=t, eps=1e-9)
    vals = [abs(trunc(2.0 ** (j - 10))) for j in range(11)]
    print("T* cos (0.4,0) t=2^(j-10) =", repr(max(vals)), [float("%.10g" % v) for v in vals])


def maximal():
    xo = (0.3, 0.2)
    # cumulative numerator by polar integration about x: N(r) = int_0^r A(rho) drho
    def A(rho):
        return rho * quad(lambda th: bump(math.hypot(xo[0] + rho * math.cos(th), xo[1] + rho * math.sin(th)))
                          * math.hypot(xo[0] + rho * math.cos(th), xo[1] + rho * math.sin(th)) ** -0.5,
                          0.0, TAU, epsrel=1e-10, points=None)
    radii = np.geomspace(0.01, 1.0, 641)
    best, rb, prev_r, acc = 0.0, 0.0, 0.0, 0.0
    for r in radii:
        acc += quad(A, prev_r, r, epsrel=1e-10)
        prev_r = r
        v = acc / ball_mass(xo, r)
        if v > best:
            best, rb = v, r
    print("Mcw bump (0.3,0.2) =", repr(best), "at r =", rb)


def norms():
    from scipy.optimize import minimize_scalar
    r = minimize_scalar(lambda t: -t * math.sqrt(4 * math.acos(t)), bounds=(0, 1), method="bounded",
                        options={"xatol": 1e-14})
    print("sup t (4 arccos t)^(1/2) =", repr(-r.fun))


SECTIONS = dict(norms=norms, constants=constants, beta=beta, riesz=riesz, frac=frac, weights=weights, rough=rough, maximal=maximal)

if __name__ == "__main__":
    for name in sys.argv[1:] or SECTIONS:
        SECTIONS[name]()
