"""Pure-Python kernels.

Reference implementation of the hot loops: the fading expectation behind the
effective capacity and the monotone root solves stacked on top of it.
``_kernels.pyx`` mirrors every function here with the same signature; this
module is what runs when the extension is not built.

All "V" quantities cross this boundary as natural logarithms, ``ln V``, which
equals ``theta * tc * R`` for an arrival rate ``R`` in bit/s.
"""
import math
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

LN2 = math.log(2.0)

# Panel layout for the moment quadrature.
LEVEL_STEP = 8.0     # drop of the log-integrand across one panel
TAIL_DEPTH = 48.0    # total drop covered to the right of the mode
MAX_WIDTH = 1.0      # panel width cap in the log variable
MAX_LEFT_LEVELS = 64
SMALL_LOG = 0.5      # below this |ln E| the expm1 form is used

RTOL = 4.0 * np.finfo(float).eps
MAXITER = 200
NEWTON_MAXITER = 40
NEWTON_XTOL = 1e-13
BIG = 1e300


@lru_cache(maxsize=None)
def gauss_legendre_unit(order):
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return tuple((0.5 * (x + 1.0)).tolist()), tuple((0.5 * w).tolist())


def _g(y, ia, c):
    if y > 700.0:
        return -math.inf
    return -math.expm1(y) * ia + c * y


def _gp(y, ia, c):
    if y > 700.0:
        return -math.inf
    return -math.exp(y) * ia + c


def _level(target, lo, hi, ia, c):
    # g(lo) > target >= g(hi) on one monotone branch. Returns a point past the
    # crossing by less than half a level step; precision is not needed here.
    dxold = abs(hi - lo)
    for _ in range(100):
        gh = _g(hi, ia, c)
        if gh >= target - 0.5 * LEVEL_STEP:
            return hi
        d = _gp(hi, ia, c)
        yn = math.nan
        if math.isfinite(gh) and math.isfinite(d) and d != 0.0:
            yn = hi - (gh - target) / d
            if not (min(lo, hi) < yn < max(lo, hi)) or 2.0 * abs(yn - hi) > dxold:
                yn = math.nan
        if math.isnan(yn):
            yn = 0.5 * (lo + hi)
        dxold = abs(yn - hi)
        if _g(yn, ia, c) > target:
            lo = yn
        else:
            hi = yn
    return hi


def ln_inv_moment(s, a, order):
    """Return ``-ln E[(1 + a X)^(-s)]`` for ``X ~ Exp(1)``.

    After ``y = ln(1 + a x)`` the integrand ``exp(g(y))`` is log-concave, so
    panels are laid between points where ``g`` has dropped by a fixed amount
    from its mode and each panel gets a Gauss-Legendre rule.
    """
    return _moment(s, a, order, False)[0]


def _moment(s, a, order, grad):
    # value and, with grad, the partials in s and a: the weighted means of y
    # and of (1 - e^-y)/a under the same integrand
    if s <= 0.0 or a <= 0.0:
        return 0.0, math.nan, math.nan
    ia = 1.0 / a
    c = 1.0 - s
    ys = math.log(a * c) if c * a > 1.0 else 0.0
    gm = _g(ys, ia, c)
    curv = math.exp(ys) * ia
    h0 = math.sqrt(2.0 * LEVEL_STEP / curv)
    if ys == 0.0:
        r = -_gp(0.0, ia, c)
        if r > 0.0:
            h0 = min(h0, LEVEL_STEP / r)
    h0 = min(h0, MAX_WIDTH)

    right = [ys]
    y = ys
    step = h0
    for j in range(1, int(math.ceil(TAIL_DEPTH / LEVEL_STEP)) + 1):
        target = gm - j * LEVEL_STEP
        hi = y + step
        while _g(hi, ia, c) > target:
            y = hi
            step *= 2.0
            hi = y + step
        y = _level(target, y, hi, ia, c)
        step = max(y - right[-1], 1e-300)
        right.append(y)

    left = []
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
            step = (left[-1] if left else ys) - y
            left.append(y)
            j += 1
        left.append(0.0)

    xs, ws = gauss_legendre_unit(order)
    s1 = s2 = s3 = s4 = 0.0
    prev = None
    for b in left[::-1] + right:
        if prev is None:
            prev = b
            continue
        m = max(1, int(math.ceil((b - prev) / MAX_WIDTH)))
        width = (b - prev) / m
        for i in range(m):
            lo = prev + i * width
            for xk, wk in zip(xs, ws):
                yk = lo + width * xk
                e = math.exp(_g(yk, ia, c) - gm) * wk * width
                s1 += e
                s2 += e * math.expm1(s * yk)
                if grad:
                    s3 += e * yk
                    s4 -= e * math.expm1(-yk)
        prev = b

    ln_e = gm - math.log(a) + math.log(s1)
    if ln_e > -SMALL_LOG:
        ln_e = math.log1p(-math.exp(gm) * ia * s2)
    if grad:
        return -ln_e, s3 / s1, s * s4 / (a * s1)
    return -ln_e, math.nan, math.nan


def ln_v_grad(p_own, p_other, bw, theta, mu, n0, tc, z, order, det):
    """``ln V`` with its partials in bandwidth, own power and interferer power."""
    if p_own <= 0.0 or bw <= 0.0 or math.isinf(p_other):
        return 0.0, math.nan, math.nan, math.nan
    s = theta * bw * tc / LN2
    den = n0 * bw + mu * p_other
    a = p_own * z / den
    if det:
        v, ls, la = s * math.log1p(a), math.log1p(a), s / (1.0 + a)
    else:
        v, ls, la = _moment(s, a, order, True)
    return v, ls * theta * tc / LN2 - la * a * n0 / den, la * z / den, -la * a * mu / den


def ln_v(p_own, p_other, bw, theta, mu, n0, tc, z, order, det):
    """``ln V`` of one link: own power, the co-located interferer's power, bandwidth."""
    if p_own <= 0.0 or bw <= 0.0:
        return 0.0
    if math.isinf(p_other):
        return 0.0
    s = theta * bw * tc / LN2
    a = p_own * z / (n0 * bw + mu * p_other)
    if det:
        return s * math.log1p(a)
    return ln_inv_moment(s, a, order)


def ln_v_array(p_own, p_other, bw, theta, mu, n0, tc, z, order, det):
    p_own, p_other, bw = np.broadcast_arrays(
        np.asarray(p_own, float), np.asarray(p_other, float), np.asarray(bw, float))
    out = np.empty(p_own.shape)
    flat = out.reshape(-1)
    for i, (po, pt, b) in enumerate(zip(p_own.flat, p_other.flat, bw.flat)):
        flat[i] = ln_v(po, pt, b, theta, mu, n0, tc, z, order, det)
    return out


def _brent(f, lo, hi):
    return brentq(f, lo, hi, xtol=1e-300, rtol=RTOL, maxiter=MAXITER)


def power_for_ln_v(target, p_other, bw, theta, mu, n0, tc, z, order, det, p_hi):
    """Own power in [0, p_hi] giving ``ln V == target``; ``inf`` if out of reach."""
    if target <= 0.0:
        return 0.0

    def f(p):
        return ln_v(p, p_other, bw, theta, mu, n0, tc, z, order, det) - target

    top = f(p_hi)
    if top < 0.0:
        return math.inf
    if top == 0.0:
        return p_hi
    return _brent(f, 0.0, p_hi)


def power_for_ln_v_unbounded(target, p_other, bw, theta, mu, n0, tc, z, order, det, p_start):
    """As :func:`power_for_ln_v` but grows the bracket past ``p_start`` as needed."""
    if target <= 0.0:
        return 0.0
    if bw <= 0.0:
        return math.inf
    hi = max(p_start, 1e-12)

    def f(p):
        return ln_v(p, p_other, bw, theta, mu, n0, tc, z, order, det) - target

    while f(hi) < 0.0:
        hi *= 4.0
        if hi > BIG:
            return math.inf
    return _brent(f, 0.0, hi)


def bw_for_ln_v(target, p_own, p_other, theta, mu, n0, tc, z, order, det, bw_hi):
    """Bandwidth in [0, bw_hi] giving ``ln V == target``; ``inf`` if out of reach."""
    if target <= 0.0:
        return 0.0
    if p_own <= 0.0:
        return math.inf

    def f(b):
        return ln_v(p_own, p_other, b, theta, mu, n0, tc, z, order, det) - target

    top = f(bw_hi)
    if top < 0.0:
        return math.inf
    if top == 0.0:
        return bw_hi
    return _brent(f, 0.0, bw_hi)


def _capped_power(target, p_other, bw, theta, mu, n0, tc, z, order, det, p_max):
    p = power_for_ln_v(target, p_other, bw, theta, mu, n0, tc, z, order, det, p_max)
    return p_max if math.isinf(p) else p


def pair_min_bandwidth(t1, t2, theta1, theta2, mu1, mu2, pmax1, pmax2,
                       n0, tc, z, order, det, bw_hi):
    """Smallest bandwidth letting one pair reach ``ln V1 >= t1`` and ``ln V2 >= t2``.

    Returns ``(bw, p1, p2, pattern)``; pattern 0 pins user 1 at peak power,
    pattern 1 pins user 2. ``bw`` is ``inf`` (pattern -1) when no powers within
    the caps reach both targets below ``bw_hi``.

    With both users at peak, let ``b1``/``b2`` be the bandwidth each needs on
    its own. The user with the larger one is pinned at peak; the other's power
    then falls as bandwidth grows, which brackets the answer in ``[b2, b1]``
    (or ``[b1, b2]``). Ties go to pattern 0.
    """
    if t1 <= 0.0 and t2 <= 0.0:
        return 0.0, 0.0, 0.0, 0
    b1 = bw_for_ln_v(t1, pmax1, pmax2, theta1, mu2, n0, tc, z, order, det, bw_hi)
    b2 = bw_for_ln_v(t2, pmax2, pmax1, theta2, mu1, n0, tc, z, order, det, bw_hi)
    if math.isinf(b1) and math.isinf(b2):
        return math.inf, math.nan, math.nan, -1
    if b1 == b2:
        return b1, pmax1, pmax2, 0

    if b1 > b2:
        def free_power(b):
            return _capped_power(t2, pmax1, b, theta2, mu1, n0, tc, z, order, det, pmax2)

        def f(b):
            return ln_v(pmax1, free_power(b), b, theta1, mu2, n0, tc, z, order, det) - t1

        lo, hi = b2, min(b1, bw_hi)
    else:
        def free_power(b):
            return _capped_power(t1, pmax2, b, theta1, mu2, n0, tc, z, order, det, pmax1)

        def f(b):
            return ln_v(pmax2, free_power(b), b, theta2, mu1, n0, tc, z, order, det) - t2

        lo, hi = b1, min(b2, bw_hi)

    if b1 > b2:
        pinned = (pmax1, t1, theta1, mu2)
        free = (pmax2, t2, theta2, mu1)
    else:
        pinned = (pmax2, t2, theta2, mu1)
        free = (pmax1, t1, theta1, mu2)
    hit = None
    if hi < bw_hi:
        hit = _pair_newton(pinned, free, n0, tc, z, order, det, lo, hi)
    if hit is not None:
        bw, p = hit
    else:
        f_hi = f(hi)
        if f_hi < 0.0:
            return math.inf, math.nan, math.nan, -1
        f_lo = f(lo)
        if f_lo >= 0.0:
            bw = lo
        elif f_hi == 0.0:
            bw = hi
        else:
            bw = _brent(f, lo, hi)
        p = free_power(bw)
    if b1 > b2:
        return bw, pmax1, p, 0
    return bw, p, pmax2, 1


def _pair_newton(pinned, free, n0, tc, z, order, det, b_lo, b_hi):
    """Newton on (bandwidth, free power) from the corner ``(b_hi, free peak)``.

    Both target equations are solved together; steps are halved to stay in
    ``[b_lo, b_hi] x (0, free peak]``. ``None`` if it does not settle.
    """
    pp, tp, th_p, mu_p = pinned
    pf_max, tf, th_f, mu_f = free
    b, p = b_hi, pf_max
    for _ in range(NEWTON_MAXITER):
        v1, j11, _, j12 = ln_v_grad(pp, p, b, th_p, mu_p, n0, tc, z, order, det)
        v2, j21, j22, _ = ln_v_grad(p, pp, b, th_f, mu_f, n0, tc, z, order, det)
        f1, f2 = v1 - tp, v2 - tf
        det_j = j11 * j22 - j12 * j21
        if not (math.isfinite(det_j) and det_j != 0.0 and math.isfinite(f1) and math.isfinite(f2)):
            return None
        db = (j12 * f2 - j22 * f1) / det_j
        dp = (j21 * f1 - j11 * f2) / det_j
        t = 1.0
        for _ in range(60):
            nb, np_ = b + t * db, p + t * dp
            if b_lo <= nb <= b_hi and 0.0 < np_ <= pf_max:
                break
            t *= 0.5
        else:
            return None
        b, p = nb, np_
        if t == 1.0 and abs(db) <= NEWTON_XTOL * b and abs(dp) <= NEWTON_XTOL * p:
            return b, p
    return None


def pattern_bandwidth(t1, t2, pattern, theta1, theta2, mu1, mu2, pmax1, pmax2,
                      n0, tc, z, order, det, bw_hi):
    """Solve one peak-power pattern literally: pinned user at peak, the other's power free.

    The free power is not capped, so the caller decides validity by comparing
    it against its own peak. Returns ``(bw, p1, p2)``; ``bw`` is ``inf`` when
    the pinned user cannot reach its target below ``bw_hi``.
    """
    if pattern == 0:
        tp, tf, th_p, th_f, mu_p, mu_f, pmax_p, pmax_f = t1, t2, theta1, theta2, mu2, mu1, pmax1, pmax2
    else:
        tp, tf, th_p, th_f, mu_p, mu_f, pmax_p, pmax_f = t2, t1, theta2, theta1, mu1, mu2, pmax2, pmax1

    def pack(bw, p_free):
        return (bw, pmax_p, p_free) if pattern == 0 else (bw, p_free, pmax_p)

    if tp <= 0.0:
        # only the free user constrains bandwidth; it can always trade power for it
        bw = bw_for_ln_v(tf, pmax_f, pmax_p, th_f, mu_f, n0, tc, z, order, det, bw_hi)
        if tf <= 0.0:
            return pack(0.0, 0.0)
        return pack(bw, pmax_f)

    def free_power(b):
        return power_for_ln_v_unbounded(tf, pmax_p, b, th_f, mu_f, n0, tc, z, order, det, pmax_f)

    def f(b):
        return ln_v(pmax_p, free_power(b), b, th_p, mu_p, n0, tc, z, order, det) - tp

    if f(bw_hi) < 0.0:
        return pack(math.inf, math.nan)
    lo = bw_hi
    for _ in range(400):
        lo *= 0.5
        if f(lo) < 0.0:
            break
    else:
        return pack(lo, free_power(lo))
    bw = _brent(f, lo, bw_hi)
    return pack(bw, free_power(bw))


def interferer_power_for_ln_v(target, p_own, bw, theta, mu, n0, tc, z, order, det, p_hi):
    """Largest interferer power in [0, p_hi] that keeps ``ln V >= target``.

    ``-1.0`` when the target is missed even without interference.
    """
    def f(q):
        return ln_v(p_own, q, bw, theta, mu, n0, tc, z, order, det) - target

    if f(p_hi) >= 0.0:
        return p_hi
    if f(0.0) < 0.0:
        return -1.0
    return _brent(f, 0.0, p_hi)
