"""Reference numpy kernels for genotype peeling and risk projection.

The compiled extension in engine.pyx mirrors these functions one for one;
`riskfusion._kernels` picks whichever is available at import.  Keep the two
in lockstep: any change here must land in the .pyx as well.

Conventions shared by both backends:
  * genotype codes 0..3 = (carrier bit for locus 1) + 2 * (carrier bit for locus 2)
  * hazard/penetrance arrays cover ages 1..94 at index age-1
  * pedigree members arrive as a likelihood matrix L of shape (n, 4) plus a
    parallel vector of group codes describing each member's slot in the
    fixed first/second-degree family shape
"""

from __future__ import annotations

import numpy as np

# Group codes for the closed relation vocabulary.
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


def _build_transmission() -> np.ndarray:
    """P(child genotype | mother genotype, father genotype), shape (c, m, f).

    Each locus transmits independently; a heterozygous carrier parent passes
    the variant with probability 1/2, so the child's per-locus carrier
    probability is 1 - (1 - m/2)(1 - f/2) for parent carrier bits m, f.
    """
    t1 = np.empty((2, 2, 2))  # (child bit, mother bit, father bit)
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


def _couple_block(T: np.ndarray, likes: list[np.ndarray]) -> np.ndarray:
    """Product over children of sum_c T[c, a, b] * L_child[c]; shape (4, 4)."""
    out = np.ones((4, 4))
    for lc in likes:
        out *= np.tensordot(lc, T, (0, 0))
    return out


def peel_posterior(
    prior: np.ndarray,
    prior_partner: np.ndarray,
    L: np.ndarray,
    groups: np.ndarray,
    mat_parents: bool,
    mat_mgp: bool,
    mat_pgp: bool,
) -> np.ndarray:
    """Exact genotype posterior for the proband over the fixed family shape.

    mat_parents materializes the parent couple (required whenever anything
    on the parental side is observed); mat_mgp / mat_pgp materialize the
    maternal / paternal grandparent couples.  Absent members contribute no
    likelihood row; latent members act through their founder prior.
    """
    T = TRANSMISSION
    groups = np.asarray(groups)
    L = np.asarray(L, dtype=float)

    def rows(code: int) -> list[np.ndarray]:
        return [L[i] for i in np.nonzero(groups == code)[0]]

    def row_or_ones(code: int) -> np.ndarray:
        r = rows(code)
        return r[0] if r else np.ones(4)

    like_proband = row_or_ones(G_PROBAND)

    child_rows = rows(G_CHILD)
    if child_rows:
        cb = _couple_block(T, child_rows)  # (proband, partner)
        child_block = cb @ prior_partner
    else:
        child_block = np.ones(4)

    if mat_parents:
        sib_block = _couple_block(T, rows(G_SIBLING))  # (mother, father)

        def side(gm_code: int, gf_code: int, au_code: int, parent_code: int, mat_gp: bool) -> np.ndarray:
            like_parent = row_or_ones(parent_code)
            if mat_gp:
                au_block = _couple_block(T, rows(au_code))  # (gm, gf)
                gm_vec = prior * row_or_ones(gm_code)
                gf_vec = prior * row_or_ones(gf_code)
                over = np.einsum("pab,ab,a,b->p", T, au_block, gm_vec, gf_vec)
            else:
                over = prior
            return like_parent * over

        side_m = side(G_MAT_GRANDMOTHER, G_MAT_GRANDFATHER, G_MAT_AUNT_UNCLE, G_MOTHER, mat_mgp)
        side_f = side(G_PAT_GRANDMOTHER, G_PAT_GRANDFATHER, G_PAT_AUNT_UNCLE, G_FATHER, mat_pgp)
        above = np.einsum("gmf,mf,m,f->g", T, sib_block, side_m, side_f)
    else:
        above = prior.copy()

    post = like_proband * child_block * above
    total = post.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise ValueError("pedigree has zero likelihood under the parameter tables")
    return post / total


def cumulative_risk(haz: np.ndarray, mort: np.ndarray, a: int, tau: int) -> float:
    """Probability of a breast event in (a, a+tau] under competing mortality.

    sum_{t=a+1}^{a+tau} haz(t) * prod_{u=a+1}^{t-1} (1 - haz(u) - mort(u))
    """
    lb = haz[a : a + tau]
    ld = mort[a : a + tau]
    surv = np.cumprod(1.0 - lb - ld)
    before = np.concatenate(([1.0], surv[:-1]))
    return float(np.sum(lb * before))


def cumulative_risk_batch(
    haz: np.ndarray, mort: np.ndarray, ages: np.ndarray, tau: int
) -> np.ndarray:
    out = np.empty(len(ages), dtype=float)
    for i, a in enumerate(ages):
        out[i] = cumulative_risk(haz, mort, int(a), tau)
    return out


def modified_risk(
    haz0: np.ndarray,
    mort: np.ndarray,
    a: int,
    tau: int,
    r0_under50: float,
    r0_over50: float,
) -> float:
    """Non-carrier risk with per-year survival exponentiated by r0(t).

    The per-year modified hazard is 1 - (1 - haz0(t))^(r0(t)); the survivor
    factor multiplies ((1 - haz0(u))^(r0(u)) - mort(u)) across earlier years,
    the direct discrete analogue of the powered-survival construction.
    r0 is piecewise constant in age with the single break at 50.
    """
    ages = np.arange(a + 1, a + tau + 1)
    r0 = np.where(ages < 50, r0_under50, r0_over50)
    keep = (1.0 - haz0[a : a + tau]) ** r0
    lm = 1.0 - keep
    terms = keep - mort[a : a + tau]
    if tau > 1 and np.any(terms[:-1] <= 0.0):
        bad = int(ages[np.nonzero(terms[:-1] <= 0.0)[0][0]])
        raise ValueError(f"modified survivor factor is non-positive at age {bad}")
    surv = np.cumprod(terms)
    before = np.concatenate(([1.0], surv[:-1]))
    return float(np.sum(lm * before))


def modified_risk_batch(
    haz0: np.ndarray,
    mort: np.ndarray,
    ages: np.ndarray,
    tau: int,
    r0_under50: np.ndarray,
    r0_over50: np.ndarray,
) -> np.ndarray:
    out = np.empty(len(ages), dtype=float)
    for i in range(len(ages)):
        out[i] = modified_risk(
            haz0, mort, int(ages[i]), tau, float(r0_under50[i]), float(r0_over50[i])
        )
    return out
