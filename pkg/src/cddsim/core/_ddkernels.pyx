# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled double-double kernels (matrix product and Jacobi sweeps).

Mirrors ``_ddpython`` operation for operation; must be built without
floating-point contraction or fast-math so the error-free transforms hold.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, copysign, hypot

from ._ddpython import round_robin

KIND = "compiled"

cdef struct dd:
    double hi
    double lo

cdef struct cdd:
    double rh
    double rl
    double ih
    double il


cdef inline dd two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double s = a + b
    cdef double bb = s - a
    r.hi = s
    r.lo = (a - (s - bb)) + (b - bb)
    return r


cdef inline dd quick_two_sum(double a, double b) noexcept nogil:
    cdef dd r
    cdef double s = a + b
    r.hi = s
    r.lo = b - (s - a)
    return r


cdef inline dd two_prod(double a, double b) noexcept nogil:
    cdef dd r
    cdef double p = a * b
    cdef double t = 134217729.0 * a
    cdef double ah = t - (t - a)
    cdef double al = a - ah
    t = 134217729.0 * b
    cdef double bh = t - (t - b)
    cdef double bl = b - bh
    r.hi = p
    r.lo = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return r


cdef inline dd dd_add(double ah, double al, double bh, double bl) noexcept nogil:
    cdef dd s = two_sum(ah, bh)
    cdef dd t = two_sum(al, bl)
    cdef double e = s.lo + t.hi
    s = quick_two_sum(s.hi, e)
    e = s.lo + t.lo
    return quick_two_sum(s.hi, e)


cdef inline dd dd_mul(double ah, double al, double bh, double bl) noexcept nogil:
    cdef dd p = two_prod(ah, bh)
    cdef double e = p.lo + (ah * bl + al * bh)
    return quick_two_sum(p.hi, e)


cdef inline dd dd_div(double ah, double al, double bh, double bl) noexcept nogil:
    cdef double q1 = ah / bh
    cdef dd p = dd_mul(bh, bl, q1, 0.0 * q1)
    cdef dd r = dd_add(ah, al, -p.hi, -p.lo)
    cdef double q2 = r.hi / bh
    p = dd_mul(bh, bl, q2, 0.0 * q2)
    r = dd_add(r.hi, r.lo, -p.hi, -p.lo)
    cdef double q3 = r.hi / bh
    cdef dd q = quick_two_sum(q1, q2)
    return dd_add(q.hi, q.lo, q3, 0.0 * q3)


cdef inline dd dd_sqrt(double ah, double al) noexcept nogil:
    cdef double x = sqrt(ah)
    cdef double safe = x if x > 0 else 1.0
    cdef dd s = two_prod(x, x)
    cdef dd r = dd_add(ah, al, -s.hi, -s.lo)
    cdef double corr = r.hi / (2.0 * safe)
    if not (x > 0):
        corr = 0.0
    return quick_two_sum(x, corr)


cdef inline cdd cmul(cdd a, cdd b) noexcept nogil:
    cdef dd p1 = dd_mul(a.rh, a.rl, b.rh, b.rl)
    cdef dd p2 = dd_mul(a.ih, a.il, b.ih, b.il)
    cdef dd p3 = dd_mul(a.rh, a.rl, b.ih, b.il)
    cdef dd p4 = dd_mul(a.ih, a.il, b.rh, b.rl)
    cdef dd re = dd_add(p1.hi, p1.lo, -p2.hi, -p2.lo)
    cdef dd im = dd_add(p3.hi, p3.lo, p4.hi, p4.lo)
    cdef cdd r
    r.rh = re.hi
    r.rl = re.lo
    r.ih = im.hi
    r.il = im.lo
    return r


cdef inline cdd cadd(cdd a, cdd b) noexcept nogil:
    cdef dd re = dd_add(a.rh, a.rl, b.rh, b.rl)
    cdef dd im = dd_add(a.ih, a.il, b.ih, b.il)
    cdef cdd r
    r.rh = re.hi
    r.rl = re.lo
    r.ih = im.hi
    r.il = im.lo
    return r


cdef inline cdd cneg(cdd a) noexcept nogil:
    cdef cdd r
    r.rh = -a.rh
    r.rl = -a.rl
    r.ih = -a.ih
    r.il = -a.il
    return r


cdef inline cdd cconj(cdd a) noexcept nogil:
    cdef cdd r
    r.rh = a.rh
    r.rl = a.rl
    r.ih = -a.ih
    r.il = -a.il
    return r


cdef inline cdd load(double[:, ::1] H, double[:, ::1] L, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef cdd r
    r.rh = H[i, 2 * j]
    r.ih = H[i, 2 * j + 1]
    r.rl = L[i, 2 * j]
    r.il = L[i, 2 * j + 1]
    return r


cdef inline void store(double[:, ::1] H, double[:, ::1] L, Py_ssize_t i, Py_ssize_t j, cdd v) noexcept nogil:
    H[i, 2 * j] = v.rh
    H[i, 2 * j + 1] = v.ih
    L[i, 2 * j] = v.rl
    L[i, 2 * j + 1] = v.il


def gemm(ah, al, bh, bl):
    """Complex double-double ``(ah + al) @ (bh + bl)`` (see ``_ddpython.gemm``)."""
    ah = np.ascontiguousarray(ah, dtype=np.complex128)
    al = np.ascontiguousarray(al, dtype=np.complex128)
    bh = np.ascontiguousarray(bh, dtype=np.complex128)
    bl = np.ascontiguousarray(bl, dtype=np.complex128)
    cdef Py_ssize_t n = ah.shape[0], kdim = ah.shape[1], m = bh.shape[1]
    cdef double[:, ::1] A = ah.view(np.float64)
    cdef double[:, ::1] Al = al.view(np.float64)
    cdef double[:, ::1] B = bh.view(np.float64)
    cdef double[:, ::1] Bl = bl.view(np.float64)
    ch_arr = np.empty((n, m), dtype=np.complex128)
    cl_arr = np.empty((n, m), dtype=np.complex128)
    cdef double[:, ::1] C = ch_arr.view(np.float64)
    cdef double[:, ::1] Cl = cl_arr.view(np.float64)
    acc = np.zeros((4, m), dtype=np.float64)
    cdef double[:, ::1] S = acc
    cdef Py_ssize_t i, j, k
    cdef double ar, ai, arl, ail, br, bi, brl, bil
    cdef dd p, q
    with nogil:
        for i in range(n):
            for j in range(m):
                S[0, j] = 0.0
                S[1, j] = 0.0
                S[2, j] = 0.0
                S[3, j] = 0.0
            for k in range(kdim):
                ar = A[i, 2 * k]
                ai = A[i, 2 * k + 1]
                arl = Al[i, 2 * k]
                ail = Al[i, 2 * k + 1]
                for j in range(m):
                    br = B[k, 2 * j]
                    bi = B[k, 2 * j + 1]
                    brl = Bl[k, 2 * j]
                    bil = Bl[k, 2 * j + 1]
                    # real part: S[0] running sum, S[1] compensation
                    p = two_prod(ar, br)
                    q = two_sum(S[0, j], p.hi)
                    S[0, j] = q.hi
                    S[1, j] = S[1, j] + (q.lo + p.lo)
                    p = two_prod(ai, bi)
                    q = two_sum(S[0, j], -p.hi)
                    S[0, j] = q.hi
                    S[1, j] = S[1, j] + (q.lo - p.lo)
                    S[1, j] = S[1, j] + ((ar * brl + arl * br) - (ai * bil + ail * bi))
                    # imaginary part
                    p = two_prod(ar, bi)
                    q = two_sum(S[2, j], p.hi)
                    S[2, j] = q.hi
                    S[3, j] = S[3, j] + (q.lo + p.lo)
                    p = two_prod(ai, br)
                    q = two_sum(S[2, j], p.hi)
                    S[2, j] = q.hi
                    S[3, j] = S[3, j] + (q.lo + p.lo)
                    S[3, j] = S[3, j] + ((ar * bil + arl * bi) + (ai * brl + ail * br))
            for j in range(m):
                q = two_sum(S[0, j], S[1, j])
                C[i, 2 * j] = q.hi
                Cl[i, 2 * j] = q.lo
                q = two_sum(S[2, j], S[3, j])
                C[i, 2 * j + 1] = q.hi
                Cl[i, 2 * j + 1] = q.lo
    return ch_arr, cl_arr


cdef void _params(double app, double aqq, double br, double bi,
                  cdd* c, cdd* s, cdd* su, cdd* cu) noexcept nogil:
    cdef double absb = hypot(br, bi)
    cdef double tau = (aqq - app) / (2.0 * absb)
    cdef double t = copysign(1.0, tau) / (fabs(tau) + sqrt(1.0 + tau * tau))
    cdef dd t2 = two_prod(t, t)
    cdef dd o = dd_add(1.0, 0.0, t2.hi, t2.lo)
    cdef dd r = dd_sqrt(o.hi, o.lo)
    cdef dd cc = dd_div(1.0, 0.0, r.hi, r.lo)
    cdef dd ss = dd_mul(cc.hi, cc.lo, t, 0.0)
    cdef double udr = br / absb
    cdef double udi = -bi / absb
    cdef dd x = two_prod(udr, udr)
    cdef dd y = two_prod(udi, udi)
    cdef dd mm = dd_add(x.hi, x.lo, y.hi, y.lo)
    cdef dd nn = dd_sqrt(mm.hi, mm.lo)
    cdef dd ur = dd_div(udr, 0.0, nn.hi, nn.lo)
    cdef dd ui = dd_div(udi, 0.0, nn.hi, nn.lo)
    cdef cdd u
    u.rh = ur.hi
    u.rl = ur.lo
    u.ih = ui.hi
    u.il = ui.lo
    c.rh = cc.hi
    c.rl = cc.lo
    c.ih = 0.0
    c.il = 0.0
    s.rh = ss.hi
    s.rl = ss.lo
    s.ih = 0.0
    s.il = 0.0
    su[0] = cmul(s[0], u)
    cu[0] = cmul(c[0], u)


cdef void _rot_cols(double[:, ::1] H, double[:, ::1] L, Py_ssize_t p, Py_ssize_t q,
                    cdd c, cdd s, cdd su, cdd cu) noexcept nogil:
    cdef Py_ssize_t k
    cdef cdd P, Q, newp, newq
    for k in range(H.shape[0]):
        P = load(H, L, k, p)
        Q = load(H, L, k, q)
        newp = cadd(cmul(c, P), cneg(cmul(su, Q)))
        newq = cadd(cmul(s, P), cmul(cu, Q))
        store(H, L, k, p, newp)
        store(H, L, k, q, newq)


cdef void _rot_rows(double[:, ::1] H, double[:, ::1] L, Py_ssize_t p, Py_ssize_t q,
                    cdd c, cdd s, cdd su, cdd cu) noexcept nogil:
    cdef Py_ssize_t k
    cdef cdd P, Q, newp, newq
    cdef cdd suc = cconj(su)
    cdef cdd cuc = cconj(cu)
    for k in range(H.shape[1] // 2):
        P = load(H, L, p, k)
        Q = load(H, L, q, k)
        newp = cadd(cmul(c, P), cneg(cmul(suc, Q)))
        newq = cadd(cmul(s, P), cmul(cuc, Q))
        store(H, L, p, k, newp)
        store(H, L, q, k, newq)


def jacobi(ah, al, vh, vl, double tol, int max_sweeps=30):
    """In-place cyclic Jacobi; see ``_ddpython.jacobi`` for the contract."""
    for arr in (ah, al, vh, vl):
        if not (arr.flags.c_contiguous and arr.dtype == np.complex128):
            raise ValueError("jacobi needs C-contiguous complex128 arrays")
    cdef double[:, ::1] AH = ah.view(np.float64)
    cdef double[:, ::1] AL = al.view(np.float64)
    cdef double[:, ::1] VH = vh.view(np.float64)
    cdef double[:, ::1] VL = vl.view(np.float64)
    cdef Py_ssize_t n = ah.shape[0]
    rounds = [np.array(r, dtype=np.intp).reshape(-1, 2) for r in round_robin(n)]
    cdef Py_ssize_t[:, ::1] pairs
    cdef Py_ssize_t npairs, idx, p, q, nact
    cdef int sweeps = 0, sweep
    cdef long rotated
    cdef double br, bi, app, aqq
    work = np.empty((n, 4), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] act = work
    # per-pair rotation parameters for one round: c, s, su, cu
    prm = np.empty((n, 16), dtype=np.float64)
    cdef double[:, ::1] PR = prm
    cdef cdd c, s, su, cu
    for sweep in range(max_sweeps):
        rotated = 0
        for r in rounds:
            pairs = r
            npairs = pairs.shape[0]
            nact = 0
            with nogil:
                for idx in range(npairs):
                    p = pairs[idx, 0]
                    q = pairs[idx, 1]
                    br = AH[p, 2 * q]
                    bi = AH[p, 2 * q + 1]
                    if hypot(br, bi) > tol:
                        app = AH[p, 2 * p] + AL[p, 2 * p]
                        aqq = AH[q, 2 * q] + AL[q, 2 * q]
                        _params(app, aqq, br, bi, &c, &s, &su, &cu)
                        act[nact, 0] = p
                        act[nact, 1] = q
                        PR[nact, 0] = c.rh; PR[nact, 1] = c.rl; PR[nact, 2] = c.ih; PR[nact, 3] = c.il
                        PR[nact, 4] = s.rh; PR[nact, 5] = s.rl; PR[nact, 6] = s.ih; PR[nact, 7] = s.il
                        PR[nact, 8] = su.rh; PR[nact, 9] = su.rl; PR[nact, 10] = su.ih; PR[nact, 11] = su.il
                        PR[nact, 12] = cu.rh; PR[nact, 13] = cu.rl; PR[nact, 14] = cu.ih; PR[nact, 15] = cu.il
                        nact += 1
                # same staging as the numpy path: all columns, all rows, then V
                for idx in range(nact):
                    _unpack(PR, idx, &c, &s, &su, &cu)
                    _rot_cols(AH, AL, act[idx, 0], act[idx, 1], c, s, su, cu)
                for idx in range(nact):
                    _unpack(PR, idx, &c, &s, &su, &cu)
                    _rot_rows(AH, AL, act[idx, 0], act[idx, 1], c, s, su, cu)
                for idx in range(nact):
                    _unpack(PR, idx, &c, &s, &su, &cu)
                    _rot_cols(VH, VL, act[idx, 0], act[idx, 1], c, s, su, cu)
            rotated += nact
        if rotated == 0:
            break
        sweeps += 1
    return sweeps


cdef inline void _unpack(double[:, ::1] PR, Py_ssize_t i, cdd* c, cdd* s, cdd* su, cdd* cu) noexcept nogil:
    c.rh = PR[i, 0]; c.rl = PR[i, 1]; c.ih = PR[i, 2]; c.il = PR[i, 3]
    s.rh = PR[i, 4]; s.rl = PR[i, 5]; s.ih = PR[i, 6]; s.il = PR[i, 7]
    su.rh = PR[i, 8]; su.rl = PR[i, 9]; su.ih = PR[i, 10]; su.il = PR[i, 11]
    cu.rh = PR[i, 12]; cu.rl = PR[i, 13]; cu.ih = PR[i, 14]; cu.il = PR[i, 15]
