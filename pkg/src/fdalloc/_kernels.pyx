# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same API and numerics as ``_pykernels``."""
from libc.math cimport exp, log, log1p, expm1, sqrt, ceil, fabs, INFINITY, NAN, isinf, isnan, isfinite

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double LN2 = log(2.0)
cdef double LEVEL_STEP = 8.0
cdef double TAIL_DEPTH = 48.0
cdef double MAX_WIDTH = 1.0
cdef double SMALL_LOG = 0.5
cdef double RTOL = 4.0 * 2.220446049250313e-16
cdef int MAXITER = 200
cdef int NEWTON_MAXITER = 40
cdef double NEWTON_XTOL = 1e-13
cdef double BIG = 1e300

DEF MAX_ORDER = 64
DEF MAX_BREAKS = 80
DEF MAX_LEFT_LEVELS = 64

cdef double GL_X[MAX_ORDER]
cdef double GL_W[MAX_ORDER]
cdef int GL_ORDER = 0


cdef int _set_order(int order) except -1:
    global GL_ORDER
    cdef int i
    if order == GL_ORDER:
        return 0
    if order < 1 or order > MAX_ORDER:
        raise ValueError("quadrature order must be in [1, %d]" % MAX_ORDER)
    x, w = np.polynomial.legendre.leggauss(order)
    for i in range(order):
        GL_X[i] = 0.5 * (x[i] + 1.0)
        GL_W[i] = 0.5 * w[i]
    GL_ORDER = order
    return 0


cdef inline double _g(double y, double ia, double c) noexcept nogil:
    if y > 700.0:
        return -INFINITY
    return -expm1(y) * ia + c * y


cdef inline double _gp(double y, double ia, double c) noexcept nogil:
    if y > 700.0:
        return -INFINITY
    return -exp(y) * ia + c


cdef double _level(double target, double lo, double hi, double ia, double c) noexcept nogil:
    cdef double dxold = fabs(hi - lo), gh, d, yn
    cdef int it
    for it in range(100):
        gh = _g(hi, ia, c)
        if gh >= target - 0.5 * LEVEL_STEP:
            return hi
        d = _gp(hi, ia, c)
        yn = NAN
        if isfinite(gh) and isfinite(d) and d != 0.0:
            yn = hi - (gh - target) / d
            if not (min(lo, hi) < yn < max(lo, hi)) or 2.0 * fabs(yn - hi) > dxold:
                yn = NAN
        if isnan(yn):
            yn = 0.5 * (lo + hi)
        dxold = fabs(yn - hi)
        if _g(yn, ia, c) > target:
            lo = yn
        else:
            hi = yn
    return hi


cdef double _ln_inv_moment(double s, double a) noexcept nogil:
    return _ln_inv_moment_d(s, a, NULL, NULL)


cdef double _ln_inv_moment_d(double s, double a, double* d_s, double* d_a) noexcept nogil:
    # -ln E[(1 + a X)^-s]; when d_s/d_a are given, also its partials in s and a
    # (weighted means of y and (1 - e^-y)/a under the same integrand).
    cdef double ia, c, ys, gm, curv, h0, r, y, step, target, hi
    cdef double s3 = 0.0, s4 = 0.0
    cdef bint grad = d_s != NULL
    cdef double breaks[MAX_BREAKS]
    cdef double left[MAX_LEFT_LEVELS + 2]
    cdef int nb = 0, nl = 0, j, i, k, m, nright
    cdef double s1 = 0.0, s2 = 0.0, prev, b, width, lo, yk, e, ln_e
    if s <= 0.0 or a <= 0.0:
        if grad:
            d_s[0] = NAN
            d_a[0] = NAN
        return 0.0
    ia = 1.0 / a
    c = 1.0 - s
    ys = log(a * c) if c * a > 1.0 else 0.0
    gm = _g(ys, ia, c)
    curv = exp(ys) * ia
    h0 = sqrt(2.0 * LEVEL_STEP / curv)
    if ys == 0.0:
        r = -_gp(0.0, ia, c)
        if r > 0.0:
            h0 = min(h0, LEVEL_STEP / r)
    h0 = min(h0, MAX_WIDTH)

    if ys > 0.0:
        y = ys
        step = h0
        j = 1
        while gm - j * LEVEL_STEP > 0.0 and j <= MAX_LEFT_LEVELS:
            target = gm - j * LEVEL_STEP
            hi = y - step
            while hi > 0.0 and _g(hi, ia, c) > target:
                y = hi
                step *= 2.0
                hi = y - step
            if hi <= 0.0:
                break
            y = _level(target, y, hi, ia, c)
            step = (left[nl - 1] if nl > 0 else ys) - y
            left[nl] = y
            nl += 1
            j += 1
        left[nl] = 0.0
        nl += 1
    for i in range(nl):
        breaks[nb] = left[nl - 1 - i]
        nb += 1

    breaks[nb] = ys
    nb += 1
    y = ys
    step = h0
    nright = <int>ceil(TAIL_DEPTH / LEVEL_STEP)
    for j in range(1, nright + 1):
        target = gm - j * LEVEL_STEP
        hi = y + step
        while _g(hi, ia, c) > target:
            y = hi
            step *= 2.0
            hi = y + step
        y = _level(target, y, hi, ia, c)
        step = max(y - breaks[nb - 1], 1e-300)
        breaks[nb] = y
        nb += 1

    prev = breaks[0]
    for k in range(1, nb):
        b = breaks[k]
        m = <int>ceil((b - prev) / MAX_WIDTH)
        if m < 1:
            m = 1
        width = (b - prev) / m
        for i in range(m):
            lo = prev + i * width
            for j in range(GL_ORDER):
                yk = lo + width * GL_X[j]
                e = exp(_g(yk, ia, c) - gm) * GL_W[j] * width
                s1 += e
                s2 += e * expm1(s * yk)
                if grad:
                    s3 += e * yk
                    s4 += -e * expm1(-yk)
        prev = b

    if grad:
        d_s[0] = s3 / s1
        d_a[0] = s * s4 / (a * s1)

    ln_e = gm - log(a) + log(s1)
    if ln_e > -SMALL_LOG:
        ln_e = log1p(-exp(gm) * ia * s2)
    return -ln_e


ctypedef struct Link:
    double theta
    double mu
    double n0
    double tc
    double z
    bint det


cdef double _ln_v(double p_own, double p_other, double bw, Link* L) noexcept nogil:
    cdef double s, a
    if p_own <= 0.0 or bw <= 0.0 or isinf(p_other):
        return 0.0
    s = L.theta * bw * L.tc / LN2
    a = p_own * L.z / (L.n0 * bw + L.mu * p_other)
    if L.det:
        return s * log1p(a)
    return _ln_inv_moment(s, a)


cdef double _ln_v_d(double p_own, double p_other, double bw, Link* L,
                    double* d_bw, double* d_own, double* d_other) noexcept nogil:
    # ln V and its partial derivatives in bandwidth, own power, interferer power
    cdef double s, a, den, v, ls, la
    if p_own <= 0.0 or bw <= 0.0 or isinf(p_other):
        d_bw[0] = NAN
        d_own[0] = NAN
        d_other[0] = NAN
        return 0.0
    s = L.theta * bw * L.tc / LN2
    den = L.n0 * bw + L.mu * p_other
    a = p_own * L.z / den
    if L.det:
        v = s * log1p(a)
        ls = log1p(a)
        la = s / (1.0 + a)
    else:
        v = _ln_inv_moment_d(s, a, &ls, &la)
    d_bw[0] = ls * L.theta * L.tc / LN2 - la * a * L.n0 / den
    d_own[0] = la * L.z / den
    d_other[0] = -la * a * L.mu / den
    return v


# ---------------------------------------------------------------- Brent

ctypedef double (*objective)(double, void*) noexcept nogil


cdef double _brent(objective f, void* ctx, double xa, double xb) noexcept nogil:
    # Port of scipy's brentq.c with xtol=1e-300 and rtol=RTOL.
    cdef double xpre = xa, xcur = xb, xblk = 0.0, fpre, fcur, fblk = 0.0
    cdef double spre = 0.0, scur = 0.0, sbis, delta, stry, dpre, dblk
    cdef double xtol = 1e-300
    cdef int i
    fpre = f(xpre, ctx)
    fcur = f(xcur, ctx)
    if fpre == 0.0:
        return xpre
    if fcur == 0.0:
        return xcur
    if (fpre > 0.0) == (fcur > 0.0):
        return NAN
    for i in range(MAXITER):
        if fpre != 0.0 and fcur != 0.0 and ((fpre < 0.0) != (fcur < 0.0)):
            xblk = xpre
            fblk = fpre
            spre = xcur - xpre
            scur = spre
        if fabs(fblk) < fabs(fcur):
            xpre = xcur
            xcur = xblk
            xblk = xpre
            fpre = fcur
            fcur = fblk
            fblk = fpre
        delta = (xtol + RTOL * fabs(xcur)) / 2.0
        sbis = (xblk - xcur) / 2.0
        if fcur == 0.0 or fabs(sbis) < delta:
            return xcur
        if fabs(spre) > delta and fabs(fcur) < fabs(fpre):
            if xpre == xblk:
                stry = -fcur * (xcur - xpre) / (fcur - fpre)
            else:
                dpre = (fpre - fcur) / (xpre - xcur)
                dblk = (fblk - fcur) / (xblk - xcur)
                stry = -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            if 2.0 * fabs(stry) < min(fabs(spre), 3.0 * fabs(sbis) - delta):
                spre = scur
                scur = stry
            else:
                spre = sbis
                scur = sbis
        else:
            spre = sbis
            scur = sbis
        xpre = xcur
        fpre = fcur
        if fabs(scur) > delta:
            xcur += scur
        else:
            xcur += delta if sbis > 0.0 else -delta
        fcur = f(xcur, ctx)
    return xcur


# ------------------------------------------------------- single-link solves

ctypedef struct PowerCtx:
    Link* L
    double target
    double p_other
    double bw


cdef double _power_obj(double p, void* ctx) noexcept nogil:
    cdef PowerCtx* c = <PowerCtx*>ctx
    return _ln_v(p, c.p_other, c.bw, c.L) - c.target


cdef double _power_for(double target, double p_other, double bw, Link* L, double p_hi) noexcept nogil:
    cdef PowerCtx c
    cdef double top
    if target <= 0.0:
        return 0.0
    c.L = L
    c.target = target
    c.p_other = p_other
    c.bw = bw
    top = _power_obj(p_hi, &c)
    if top < 0.0:
        return INFINITY
    if top == 0.0:
        return p_hi
    return _brent(_power_obj, &c, 0.0, p_hi)


cdef double _power_unbounded(double target, double p_other, double bw, Link* L, double p_start) noexcept nogil:
    cdef PowerCtx c
    cdef double hi
    if target <= 0.0:
        return 0.0
    if bw <= 0.0:
        return INFINITY
    c.L = L
    c.target = target
    c.p_other = p_other
    c.bw = bw
    hi = max(p_start, 1e-12)
    while _power_obj(hi, &c) < 0.0:
        hi *= 4.0
        if hi > BIG:
            return INFINITY
    return _brent(_power_obj, &c, 0.0, hi)


ctypedef struct BwCtx:
    Link* L
    double target
    double p_own
    double p_other


cdef double _bw_obj(double b, void* ctx) noexcept nogil:
    cdef BwCtx* c = <BwCtx*>ctx
    return _ln_v(c.p_own, c.p_other, b, c.L) - c.target


cdef double _bw_for(double target, double p_own, double p_other, Link* L, double bw_hi) noexcept nogil:
    cdef BwCtx c
    cdef double top
    if target <= 0.0:
        return 0.0
    if p_own <= 0.0:
        return INFINITY
    c.L = L
    c.target = target
    c.p_own = p_own
    c.p_other = p_other
    top = _bw_obj(bw_hi, &c)
    if top < 0.0:
        return INFINITY
    if top == 0.0:
        return bw_hi
    return _brent(_bw_obj, &c, 0.0, bw_hi)


# ------------------------------------------------------------ pair solves

ctypedef struct PairCtx:
    Link* pinned       # link of the user held at peak power
    Link* free         # link of the user whose power adapts
    double t_pinned
    double t_free
    double p_pinned
    double p_free_max
    bint capped


cdef double _free_power(double b, PairCtx* c) noexcept nogil:
    cdef double p
    if c.capped:
        p = _power_for(c.t_free, c.p_pinned, b, c.free, c.p_free_max)
        return c.p_free_max if isinf(p) else p
    return _power_unbounded(c.t_free, c.p_pinned, b, c.free, c.p_free_max)


cdef double _pair_obj(double b, void* ctx) noexcept nogil:
    cdef PairCtx* c = <PairCtx*>ctx
    return _ln_v(c.p_pinned, _free_power(b, c), b, c.pinned) - c.t_pinned


cdef bint _pair_newton(PairCtx* c, double b_lo, double b_hi, double* b_io, double* p_io) noexcept nogil:
    # Newton on (bandwidth, free power) for the two target equations, kept
    # inside the box [b_lo, b_hi] x (0, p_free_max] by step halving. Returns
    # False when it does not settle; the caller then falls back to Brent.
    cdef double b = b_io[0], p = p_io[0], f1, f2, j11, j12, j21, j22, unused, det
    cdef double db, dp, t, nb, np_
    cdef int it, k
    for it in range(NEWTON_MAXITER):
        f1 = _ln_v_d(c.p_pinned, p, b, c.pinned, &j11, &unused, &j12) - c.t_pinned
        f2 = _ln_v_d(p, c.p_pinned, b, c.free, &j21, &j22, &unused) - c.t_free
        det = j11 * j22 - j12 * j21
        if not isfinite(det) or det == 0.0 or not isfinite(f1) or not isfinite(f2):
            return False
        db = (j12 * f2 - j22 * f1) / det
        dp = (j21 * f1 - j11 * f2) / det
        t = 1.0
        for k in range(60):
            nb = b + t * db
            np_ = p + t * dp
            if b_lo <= nb <= b_hi and 0.0 < np_ <= c.p_free_max:
                break
            t *= 0.5
        else:
            return False
        b = nb
        p = np_
        if t == 1.0 and fabs(db) <= NEWTON_XTOL * b and fabs(dp) <= NEWTON_XTOL * p:
            b_io[0] = b
            p_io[0] = p
            return True
    return False


cdef inline void _links(Link* L1, Link* L2, double theta1, double theta2, double mu1, double mu2,
                        double n0, double tc, double z, bint det) noexcept nogil:
    # user 1 is interfered by user 2's transmitter and vice versa
    L1.theta = theta1
    L1.mu = mu2
    L2.theta = theta2
    L2.mu = mu1
    L1.n0 = n0
    L2.n0 = n0
    L1.tc = tc
    L2.tc = tc
    L1.z = z
    L2.z = z
    L1.det = det
    L2.det = det


def ln_inv_moment(double s, double a, int order):
    _set_order(order)
    return _ln_inv_moment(s, a)


def ln_v(double p_own, double p_other, double bw, double theta, double mu,
         double n0, double tc, double z, int order, bint det):
    cdef Link L
    _set_order(order)
    L.theta = theta
    L.mu = mu
    L.n0 = n0
    L.tc = tc
    L.z = z
    L.det = det
    return _ln_v(p_own, p_other, bw, &L)


def ln_v_grad(double p_own, double p_other, double bw, double theta, double mu,
              double n0, double tc, double z, int order, bint det):
    cdef Link L
    cdef double v, d_bw, d_own, d_other
    _set_order(order)
    L.theta = theta
    L.mu = mu
    L.n0 = n0
    L.tc = tc
    L.z = z
    L.det = det
    v = _ln_v_d(p_own, p_other, bw, &L, &d_bw, &d_own, &d_other)
    return v, d_bw, d_own, d_other


def ln_v_array(p_own, p_other, bw, double theta, double mu, double n0, double tc,
               double z, int order, bint det):
    cdef Link L
    cdef Py_ssize_t i, n
    _set_order(order)
    L.theta = theta
    L.mu = mu
    L.n0 = n0
    L.tc = tc
    L.z = z
    L.det = det
    a, b, c = np.broadcast_arrays(np.asarray(p_own, float), np.asarray(p_other, float),
                                  np.asarray(bw, float))
    shape = a.shape
    cdef double[::1] av = np.ascontiguousarray(a).reshape(-1)
    cdef double[::1] bv = np.ascontiguousarray(b).reshape(-1)
    cdef double[::1] cv = np.ascontiguousarray(c).reshape(-1)
    out = np.empty(av.shape[0])
    cdef double[::1] ov = out
    n = av.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _ln_v(av[i], bv[i], cv[i], &L)
    return out.reshape(shape)


def power_for_ln_v(double target, double p_other, double bw, double theta, double mu,
                   double n0, double tc, double z, int order, bint det, double p_hi):
    cdef Link L
    _set_order(order)
    L.theta = theta
    L.mu = mu
    L.n0 = n0
    L.tc = tc
    L.z = z
    L.det = det
    return _power_for(target, p_other, bw, &L, p_hi)


def power_for_ln_v_unbounded(double target, double p_other, double bw, double theta, double mu,
                             double n0, double tc, double z, int order, bint det, double p_start):
    cdef Link L
    _set_order(order)
    L.theta = theta
    L.mu = mu
    L.n0 = n0
    L.tc = tc
    L.z = z
    L.det = det
    return _power_unbounded(target, p_other, bw, &L, p_start)


def bw_for_ln_v(double target, double p_own, double p_other, double theta, double mu,
                double n0, double tc, double z, int order, bint det, double bw_hi):
    cdef Link L
    _set_order(order)
    L.theta = theta
    L.mu = mu
    L.n0 = n0
    L.tc = tc
    L.z = z
    L.det = det
    return _bw_for(target, p_own, p_other, &L, bw_hi)


def pair_min_bandwidth(double t1, double t2, double theta1, double theta2, double mu1, double mu2,
                       double pmax1, double pmax2, double n0, double tc, double z, int order,
                       bint det, double bw_hi):
    cdef Link L1, L2
    cdef PairCtx c
    cdef double b1, b2, lo, hi, f_lo, f_hi, bw, p
    _set_order(order)
    if t1 <= 0.0 and t2 <= 0.0:
        return 0.0, 0.0, 0.0, 0
    _links(&L1, &L2, theta1, theta2, mu1, mu2, n0, tc, z, det)
    b1 = _bw_for(t1, pmax1, pmax2, &L1, bw_hi)
    b2 = _bw_for(t2, pmax2, pmax1, &L2, bw_hi)
    if isinf(b1) and isinf(b2):
        return INFINITY, NAN, NAN, -1
    if b1 == b2:
        return b1, pmax1, pmax2, 0
    c.capped = True
    if b1 > b2:
        c.pinned = &L1
        c.free = &L2
        c.t_pinned = t1
        c.t_free = t2
        c.p_pinned = pmax1
        c.p_free_max = pmax2
        lo = b2
        hi = min(b1, bw_hi)
    else:
        c.pinned = &L2
        c.free = &L1
        c.t_pinned = t2
        c.t_free = t1
        c.p_pinned = pmax2
        c.p_free_max = pmax1
        lo = b1
        hi = min(b2, bw_hi)
    bw = hi
    p = c.p_free_max
    if not (hi < bw_hi and _pair_newton(&c, lo, hi, &bw, &p)):
        f_hi = _pair_obj(hi, &c)
        if f_hi < 0.0:
            return INFINITY, NAN, NAN, -1
        f_lo = _pair_obj(lo, &c)
        if f_lo >= 0.0:
            bw = lo
        elif f_hi == 0.0:
            bw = hi
        else:
            bw = _brent(_pair_obj, &c, lo, hi)
        p = _free_power(bw, &c)
    if b1 > b2:
        return bw, pmax1, p, 0
    return bw, p, pmax2, 1


cdef tuple _pack(int pattern, double p_pinned, double bw, double p_free):
    if pattern == 0:
        return (bw, p_pinned, p_free)
    return (bw, p_free, p_pinned)


def pattern_bandwidth(double t1, double t2, int pattern, double theta1, double theta2,
                      double mu1, double mu2, double pmax1, double pmax2, double n0,
                      double tc, double z, int order, bint det, double bw_hi):
    cdef Link L1, L2
    cdef PairCtx c
    cdef double lo, bw
    cdef int k
    _set_order(order)
    _links(&L1, &L2, theta1, theta2, mu1, mu2, n0, tc, z, det)
    c.capped = False
    if pattern == 0:
        c.pinned = &L1
        c.free = &L2
        c.t_pinned = t1
        c.t_free = t2
        c.p_pinned = pmax1
        c.p_free_max = pmax2
    else:
        c.pinned = &L2
        c.free = &L1
        c.t_pinned = t2
        c.t_free = t1
        c.p_pinned = pmax2
        c.p_free_max = pmax1

    if c.t_pinned <= 0.0:
        if c.t_free <= 0.0:
            return _pack(pattern, c.p_pinned, 0.0, 0.0)
        bw = _bw_for(c.t_free, c.p_free_max, c.p_pinned, c.free, bw_hi)
        return _pack(pattern, c.p_pinned, bw, c.p_free_max)
    if _pair_obj(bw_hi, &c) < 0.0:
        return _pack(pattern, c.p_pinned, INFINITY, NAN)
    lo = bw_hi
    for k in range(400):
        lo *= 0.5
        if _pair_obj(lo, &c) < 0.0:
            break
    else:
        return _pack(pattern, c.p_pinned, lo, _free_power(lo, &c))
    bw = _brent(_pair_obj, &c, lo, bw_hi)
    return _pack(pattern, c.p_pinned, bw, _free_power(bw, &c))


ctypedef struct InterfCtx:
    Link* L
    double target
    double p_own
    double bw


cdef double _interf_obj(double q, void* ctx) noexcept nogil:
    cdef InterfCtx* c = <InterfCtx*>ctx
    return _ln_v(c.p_own, q, c.bw, c.L) - c.target


def interferer_power_for_ln_v(double target, double p_own, double bw, double theta, double mu,
                              double n0, double tc, double z, int order, bint det, double p_hi):
    cdef Link L
    cdef InterfCtx c
    _set_order(order)
    L.theta = theta
    L.mu = mu
    L.n0 = n0
    L.tc = tc
    L.z = z
    L.det = det
    c.L = &L
    c.target = target
    c.p_own = p_own
    c.bw = bw
    if _interf_obj(p_hi, &c) >= 0.0:
        return p_hi
    if _interf_obj(0.0, &c) < 0.0:
        return -1.0
    return _brent(_interf_obj, &c, 0.0, p_hi)
