# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled peeling and projection kernels.

Mirror of riskfusion._kernels.pure; see that module for the conventions.
The algebra is identical up to floating summation order.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

G_PROBAND = 0
G_MOTHER = 1
G_FATHER = 2
G_SIBLING = 3
G_CHILD = 4
G_MAT_GRANDMOTHER = 5
G_MAT_GRANDFATHER = 6
G_MAT_AUNT_UNCLE = 7
G_PAT_GRANDMOTHER = 8
G_PAT_GRANDFATHER = 9
G_PAT_AUNT_UNCLE = 10


def _build_transmission():
    t1 = np.empty((2, 2, 2))
    for m in (0, 1):
        for f in (0, 1):
            p = 1.0 - (1.0 - m / 2.0) * (1.0 - f / 2.0)
            t1[1, m, f] = p
            t1[0, m, f] = 1.0 - p
    T = np.empty((4, 4, 4))
    for c in range(4):
        c1, c2 = c & 1, c >> 1
        for m in range(4):
            m1, m2 = m & 1, m >> 1
            for f in range(4):
                f1, f2 = f & 1, f >> 1
                T[c, m, f] = t1[c1, m1, f1] * t1[c2, m2, f2]
    T.flags.writeable = False
    return T


TRANSMISSION = _build_transmission()
cdef double[64] _T_FLAT
_tmp = np.ascontiguousarray(TRANSMISSION, dtype=np.float64).ravel()
for _i in range(64):
    _T_FLAT[_i] = _tmp[_i]


cdef inline double _t(int c, int m, int f) nogil:
    return _T_FLAT[(c << 4) | (m << 2) | f]


cdef void _couple_block(const double[:, ::1] L, const long[::1] groups, int code, double* out) nogil:
    """out[a*4+b] = prod over members in the group of sum_c T[c,a,b]*L[c]."""
    cdef int i, a, b, c, n = groups.shape[0]
    cdef double s
    for a in range(16):
        out[a] = 1.0
    for i in range(n):
        if groups[i] != code:
            continue
        for a in range(4):
            for b in range(4):
                s = 0.0
                for c in range(4):
                    s += _t(c, a, b) * L[i, c]
                out[a * 4 + b] *= s


cdef void _row_or_ones(const double[:, ::1] L, const long[::1] groups, int code, double* out) nogil:
    cdef int i, g, n = groups.shape[0]
    for g in range(4):
        out[g] = 1.0
    for i in range(n):
        if groups[i] == code:
            for g in range(4):
                out[g] = L[i, g]
            return


def peel_posterior(prior, prior_partner, L, groups,
                   bint mat_parents, bint mat_mgp, bint mat_pgp):
    cdef const double[::1] pr = np.ascontiguousarray(prior, dtype=np.float64)
    cdef const double[::1] prw = np.ascontiguousarray(prior_partner, dtype=np.float64)
    cdef const double[:, ::1] Lm = np.ascontiguousarray(L, dtype=np.float64)
    cdef const long[::1] gr = np.ascontiguousarray(groups, dtype=np.int64)

    cdef double[4] like_p, child_block, above, side_m, side_f, gm_vec, gf_vec, tmp
    cdef double[16] cb, sib, au
    cdef int g, w, m, f, a, b
    cdef double s, total
    cdef bint has_children = False
    cdef int i

    for i in range(gr.shape[0]):
        if gr[i] == G_CHILD:
            has_children = True
            break

    _row_or_ones(Lm, gr, G_PROBAND, like_p)

    if has_children:
        _couple_block(Lm, gr, G_CHILD, cb)
        for g in range(4):
            s = 0.0
            for w in range(4):
                s += cb[g * 4 + w] * prw[w]
            child_block[g] = s
    else:
        for g in range(4):
            child_block[g] = 1.0

    if mat_parents:
        _couple_block(Lm, gr, G_SIBLING, sib)

        # maternal side vector over the mother's genotype
        _row_or_ones(Lm, gr, G_MOTHER, tmp)
        if mat_mgp:
            _couple_block(Lm, gr, G_MAT_AUNT_UNCLE, au)
            _row_or_ones(Lm, gr, G_MAT_GRANDMOTHER, gm_vec)
            _row_or_ones(Lm, gr, G_MAT_GRANDFATHER, gf_vec)
            for a in range(4):
                gm_vec[a] *= pr[a]
                gf_vec[a] *= pr[a]
            for m in range(4):
                s = 0.0
                for a in range(4):
                    for b in range(4):
                        s += _t(m, a, b) * au[a * 4 + b] * gm_vec[a] * gf_vec[b]
                side_m[m] = tmp[m] * s
        else:
            for m in range(4):
                side_m[m] = tmp[m] * pr[m]

        _row_or_ones(Lm, gr, G_FATHER, tmp)
        if mat_pgp:
            _couple_block(Lm, gr, G_PAT_AUNT_UNCLE, au)
            _row_or_ones(Lm, gr, G_PAT_GRANDMOTHER, gm_vec)
            _row_or_ones(Lm, gr, G_PAT_GRANDFATHER, gf_vec)
            for a in range(4):
                gm_vec[a] *= pr[a]
                gf_vec[a] *= pr[a]
            for f in range(4):
                s = 0.0
                for a in range(4):
                    for b in range(4):
                        s += _t(f, a, b) * au[a * 4 + b] * gm_vec[a] * gf_vec[b]
                side_f[f] = tmp[f] * s
        else:
            for f in range(4):
                side_f[f] = tmp[f] * pr[f]

        for g in range(4):
            s = 0.0
            for m in range(4):
                for f in range(4):
                    s += _t(g, m, f) * sib[m * 4 + f] * side_m[m] * side_f[f]
            above[g] = s
    else:
        for g in range(4):
            above[g] = pr[g]

    post = np.empty(4, dtype=np.float64)
    total = 0.0
    for g in range(4):
        post[g] = like_p[g] * child_block[g] * above[g]
        total += post[g]
    if not np.isfinite(total) or total <= 0.0:
        raise ValueError("pedigree has zero likelihood under the parameter tables")
    for g in range(4):
        post[g] /= total
    return post


def cumulative_risk(haz, mort, int a, int tau):
    cdef const double[::1] hb = np.ascontiguousarray(haz, dtype=np.float64)
    cdef const double[::1] hd = np.ascontiguousarray(mort, dtype=np.float64)
    return _cumulative_risk(hb, hd, a, tau)


cdef double _cumulative_risk(const double[::1] hb, const double[::1] hd, int a, int tau) nogil:
    cdef double acc = 0.0, surv = 1.0
    cdef int t
    for t in range(a, a + tau):
        acc += hb[t] * surv
        surv *= 1.0 - hb[t] - hd[t]
    return acc


def cumulative_risk_batch(haz, mort, ages, int tau):
    cdef const double[::1] hb = np.ascontiguousarray(haz, dtype=np.float64)
    cdef const double[::1] hd = np.ascontiguousarray(mort, dtype=np.float64)
    cdef const long[::1] aa = np.ascontiguousarray(ages, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(aa.shape[0], dtype=np.float64)
    cdef int i
    for i in range(aa.shape[0]):
        out[i] = _cumulative_risk(hb, hd, <int> aa[i], tau)
    return out


cdef double _modified_risk(const double[::1] hb0, const double[::1] hd, int a, int tau,
                           double r0u, double r0o) except? -1.0:
    cdef double acc = 0.0, surv = 1.0, keep, r0, term
    cdef int t, age
    for t in range(a, a + tau):
        age = t + 1
        r0 = r0u if age < 50 else r0o
        keep = (1.0 - hb0[t]) ** r0
        acc += (1.0 - keep) * surv
        term = keep - hd[t]
        if t < a + tau - 1 and term <= 0.0:
            raise ValueError(f"modified survivor factor is non-positive at age {age}")
        surv *= term
    return acc


def modified_risk(haz0, mort, int a, int tau, double r0_under50, double r0_over50):
    cdef const double[::1] hb0 = np.ascontiguousarray(haz0, dtype=np.float64)
    cdef const double[::1] hd = np.ascontiguousarray(mort, dtype=np.float64)
    return _modified_risk(hb0, hd, a, tau, r0_under50, r0_over50)


def modified_risk_batch(haz0, mort, ages, int tau, r0_under50, r0_over50):
    cdef const double[::1] hb0 = np.ascontiguousarray(haz0, dtype=np.float64)
    cdef const double[::1] hd = np.ascontiguousarray(mort, dtype=np.float64)
    cdef const long[::1] aa = np.ascontiguousarray(ages, dtype=np.int64)
    cdef const double[::1] ru = np.ascontiguousarray(r0_under50, dtype=np.float64)
    cdef const double[::1] ro = np.ascontiguousarray(r0_over50, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(aa.shape[0], dtype=np.float64)
    cdef int i
    for i in range(aa.shape[0]):
        out[i] = _modified_risk(hb0, hd, <int> aa[i], tau, ru[i], ro[i])
    return out
