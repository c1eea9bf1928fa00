"""Pure-numpy double-double kernels.

Same arithmetic, operation for operation, as the compiled ``_ddkernels``
extension; used when the extension is unavailable or disabled.
"""
from __future__ import annotations

import math

import numpy as np

from .dd import cadd, cmul, dd_add, dd_div, dd_mul, dd_sqrt, two_prod, two_sum

KIND = "python"


def gemm(ah, al, bh, bl):
    """Complex double-double product ``(ah + al) @ (bh + bl)``.

    Products of high parts are formed exactly and summed with a compensated
    (Dot2-style) accumulator; high/low cross terms go into the compensation.
    """
    n, kdim = ah.shape
    m = bh.shape[1]
    Ar, Ai = np.ascontiguousarray(ah.real), np.ascontiguousarray(ah.imag)
    Arl, Ail = np.ascontiguousarray(al.real), np.ascontiguousarray(al.imag)
    Br, Bi = np.ascontiguousarray(bh.real), np.ascontiguousarray(bh.imag)
    Brl, Bil = np.ascontiguousarray(bl.real), np.ascontiguousarray(bl.imag)
    Sr = np.zeros((n, m))
    Cr = np.zeros((n, m))
    Si = np.zeros((n, m))
    Ci = np.zeros((n, m))
    for k in range(kdim):
        ar, ai = Ar[:, k:k + 1], Ai[:, k:k + 1]
        arl, ail = Arl[:, k:k + 1], Ail[:, k:k + 1]
        br, bi = Br[k:k + 1, :], Bi[k:k + 1, :]
        brl, bil = Brl[k:k + 1, :], Bil[k:k + 1, :]

        p, e = two_prod(ar, br)
        Sr, q = two_sum(Sr, p)
        Cr += q + e
        p, e = two_prod(ai, bi)
        Sr, q = two_sum(Sr, -p)
        Cr += q - e
        Cr += (ar * brl + arl * br) - (ai * bil + ail * bi)

        p, e = two_prod(ar, bi)
        Si, q = two_sum(Si, p)
        Ci += q + e
        p, e = two_prod(ai, br)
        Si, q = two_sum(Si, p)
        Ci += q + e
        Ci += (ar * bil + arl * bi) + (ai * brl + ail * br)
    hr, lr = two_sum(Sr, Cr)
    hi_, li = two_sum(Si, Ci)
    return hr + 1j * hi_, lr + 1j * li


def round_robin(n: int) -> list[list[tuple[int, int]]]:
    """Rounds of disjoint index pairs covering every pair ``p < q`` once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                pairs.append((min(a, b), max(a, b)))
        rounds.append(sorted(pairs))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def rotation_params(app, aqq, b):
    """Jacobi rotation for the 2x2 block ``[[app, b], [conj(b), aqq]]``.

    The angle is chosen in double precision; ``c``, ``s`` and the phase
    ``u`` are then completed in double-double so the rotation is unitary to
    that precision.  Returns ``(ch, cl, sh, sl, uh, ul)`` with ``u`` complex.
    """
    absb = abs(b)
    tau = (aqq - app) / (2.0 * absb)
    t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    t2h, t2l = two_prod(t, t)
    oh, ol = dd_add(1.0, 0.0, t2h, t2l)
    rh, rl = dd_sqrt(oh, ol)
    ch, cl = dd_div(1.0, 0.0, float(rh), float(rl))
    sh, sl = dd_mul(ch, cl, t, 0.0)
    ud = b.conjugate() / absb
    xh, xl = two_prod(ud.real, ud.real)
    yh, yl = two_prod(ud.imag, ud.imag)
    mh, ml = dd_add(xh, xl, yh, yl)
    nh, nl = dd_sqrt(mh, ml)
    nh, nl = float(nh), float(nl)
    urh, url = dd_div(ud.real, 0.0, nh, nl)
    uih, uil = dd_div(ud.imag, 0.0, nh, nl)
    return (float(ch), float(cl), float(sh), float(sl),
            complex(urh, uih), complex(url, uil))


def _rotate_columns(Mh, Ml, ps, qs, c, s, su, cu):
    """Columns ``p, q`` <- ``(c M_p - su M_q, s M_p + cu M_q)`` per pair."""
    Ph, Pl = Mh[:, ps], Ml[:, ps]
    Qh, Ql = Mh[:, qs], Ml[:, qs]
    t1 = cmul(c[0], c[1], Ph, Pl)
    t2 = cmul(su[0], su[1], Qh, Ql)
    newp = cadd(t1[0], t1[1], -t2[0], -t2[1])
    t3 = cmul(s[0], s[1], Ph, Pl)
    t4 = cmul(cu[0], cu[1], Qh, Ql)
    newq = cadd(t3[0], t3[1], t4[0], t4[1])
    Mh[:, ps], Ml[:, ps] = newp
    Mh[:, qs], Ml[:, qs] = newq


def _rotate_rows(Mh, Ml, ps, qs, c, s, su, cu):
    """Rows ``p, q`` <- ``J^H`` applied from the left."""
    Ph, Pl = Mh[ps, :], Ml[ps, :]
    Qh, Ql = Mh[qs, :], Ml[qs, :]
    col = (slice(None), None)
    c = (c[0][col], c[1][col])
    s = (s[0][col], s[1][col])
    suc = (np.conj(su[0])[col], np.conj(su[1])[col])
    cuc = (np.conj(cu[0])[col], np.conj(cu[1])[col])
    t1 = cmul(c[0], c[1], Ph, Pl)
    t2 = cmul(suc[0], suc[1], Qh, Ql)
    newp = cadd(t1[0], t1[1], -t2[0], -t2[1])
    t3 = cmul(s[0], s[1], Ph, Pl)
    t4 = cmul(cuc[0], cuc[1], Qh, Ql)
    newq = cadd(t3[0], t3[1], t4[0], t4[1])
    Mh[ps, :], Ml[ps, :] = newp
    Mh[qs, :], Ml[qs, :] = newq


def jacobi(ah, al, vh, vl, tol: float, max_sweeps: int = 30) -> int:
    """Cyclic Jacobi diagonalisation of a Hermitian double-double matrix.

    ``A`` (``ah + al``) is overwritten with ``J^H A J`` and ``V`` with
    ``V J``; all arrays are modified in place.  Pairs whose off-diagonal
    magnitude is at most ``tol`` are skipped.  Returns the number of sweeps
    that performed at least one rotation.
    """
    n = ah.shape[0]
    rounds = round_robin(n)
    sweeps = 0
    for _ in range(max_sweeps):
        rotated = 0
        for pairs in rounds:
            if not pairs:
                continue
            pp = np.array([p for p, _ in pairs])
            qq = np.array([q for _, q in pairs])
            b = ah[pp, qq]
            active = np.abs(b) > tol
            if not active.any():
                continue
            pp, qq, b = pp[active], qq[active], b[active]
            app = ah[pp, pp].real + al[pp, pp].real
            aqq = ah[qq, qq].real + al[qq, qq].real
            params = [rotation_params(float(x), float(y), complex(z))
                      for x, y, z in zip(app, aqq, b)]
            ch = np.array([r[0] for r in params])
            cl = np.array([r[1] for r in params])
            sh = np.array([r[2] for r in params])
            sl = np.array([r[3] for r in params])
            uh = np.array([r[4] for r in params])
            ul = np.array([r[5] for r in params])
            c = (ch + 0j, cl + 0j)
            s = (sh + 0j, sl + 0j)
            su = cmul(s[0], s[1], uh, ul)
            cu = cmul(c[0], c[1], uh, ul)
            _rotate_columns(ah, al, pp, qq, c, s, su, cu)
            _rotate_rows(ah, al, pp, qq, c, s, su, cu)
            _rotate_columns(vh, vl, pp, qq, c, s, su, cu)
            rotated += len(pp)
        if rotated == 0:
            break
        sweeps += 1
    return sweeps
