"""Numerical replay of the estimates behind the Jawerth and Franke embeddings.

Each routine evaluates the intermediate quantities of the corresponding
argument on a concrete field and reports them next to explicit upper bounds,
so every inequality of the chain can be asserted sample by sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..exponents import (ExponentFunction, SmoothnessFunction, conjugate_smoothness,
                         constant_exponent, constant_smoothness, separation_inf)
from ..luxemburg import DEFAULT_TOL, Grid, GridFunction, luxemburg_norm, modular_values
from ..mixed import besov_mixed_modular
from ..rearrange import rearrange_row
from ..spaces import CoefficientField, SpaceSpec, level_sequence, space_norm

__all__ = [
    "AuxReport",
    "FrankeTerms",
    "FrankeVariableReport",
    "JawerthReport",
    "NormalizationError",
    "aux_constant_bound",
    "check_aux_inequality",
    "default_beta",
    "franke_terms",
    "franke_variable_check",
    "jawerth_chain",
    "jawerth_epsilon",
]


# --------------------------------------------------------------------------
# constant-exponent Franke embedding: terms I, II, III
# --------------------------------------------------------------------------


@dataclass
class FrankeTerms:
    I: float
    II: float
    III: float
    f_norm: float
    b_norm: float
    rearranged: float
    discretized: float
    combine_constant: float
    chain: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        return {"I": self.I, "II": self.II, "III": self.III,
                "f_norm": self.f_norm, "b_norm": self.b_norm}


def default_beta(p0: float, p1: float, q: float) -> float:
    """Midpoint of the admissible range 0 < beta < min(q(1/p0 - 1/p1), q/p1)."""
    return 0.5 * min(q * (1.0 / p0 - 1.0 / p1), q / p1)


def _sum_pow(x: np.ndarray, e: float) -> float:
    x = x[x > 0]
    if x.size == 0:
        return 0.0
    top = x.max()
    return float(top ** e * np.sum((x / top) ** e))


def franke_terms(gamma: CoefficientField, p0: float, p1: float, q: float,
                 beta: float | None = None, delta: float | None = None) -> FrankeTerms:
    """Terms of the dyadic discretization of ||gamma | f^0_{p1,q}||.

    With g = (sum_j sum_l (gamma*_{j,l})**q chi*_{j,l})**(1/q) on (0, inf),
    sampling g at t = 2**(-k n) splits the discretized norm into
    I (k <= 0), II (k >= 1, j < k) and III (k >= 1, j >= k). The k-ranges are
    exact: I vanishes once 2**((j-k) n) exceeds the row length, and the
    k > J + 1 tail of II is a geometric series summed in closed form.

    Reported bounds (all rigorous for the finite field):
      f_norm <= rearranged <= (2**n - 1)**(1/p1) * discretized
      discretized <= combine_constant / (2**n - 1)**(1/p1) * (I + II + III)
      I <= constants["I"] * b_norm, and likewise for II and III,
    with the Hoelder constants from beta and delta. ``b_norm`` is the
    b^{n(1/p0 - 1/p1)}_{p0,p1} norm and ``f_norm`` the f^0_{p1,q} norm.
    """
    if not (0 < p0 < p1 < math.inf):
        raise ValueError("need 0 < p0 < p1 < inf")
    if not (0 < q <= min(1.0, p0)):
        raise ValueError("need 0 < q <= min(1, p0)")
    beta = default_beta(p0, p1, q) if beta is None else float(beta)
    delta_max = q / p0 - q / p1
    delta = delta_max if delta is None else float(delta)
    if not (0 < beta < min(q * (1 / p0 - 1 / p1), q / p1)):
        raise ValueError("beta outside (0, min(q(1/p0 - 1/p1), q/p1))")
    if not (0 < delta <= delta_max * (1 + 1e-12)):
        raise ValueError("delta outside (0, q/p0 - q/p1]")

    n = gamma.n
    J = gamma.J_max
    rows = [rearrange_row(gamma, j) for j in range(J + 1)]
    sizes = [len(r.values) for r in rows]
    r = p1 / q
    step = 2.0 ** n

    def star(j, l):
        return float(rows[j].values[l]) if l < sizes[j] else 0.0

    # I: k = -K <= 0, index 2**((j + K) n); vanishes once it passes every row
    I_p = 0.0
    K = 0
    while True:
        idx = [2 ** ((j + K) * n) for j in range(J + 1)]
        if all(i >= s for i, s in zip(idx, sizes)):
            break
        inner = sum(star(j, i) ** q for j, i in enumerate(idx))
        I_p += 2.0 ** (K * n) * inner ** r
        K += 1

    # II: k >= 1, j < k, index 0
    heads = np.array([star(j, 0) for j in range(J + 1)])
    # III: 1 <= k <= j, index 2**((j - k) n); D collects the joint k >= 1 sums
    II_p = III_p = D_p = 0.0
    for k in range(1, J + 2):
        a = _sum_pow(heads[:k], q)
        b = sum(star(j, 2 ** ((j - k) * n)) ** q for j in range(k, J + 1))
        II_p += 2.0 ** (-k * n) * a ** r
        III_p += 2.0 ** (-k * n) * b ** r
        D_p += 2.0 ** (-k * n) * (a + b) ** r
    tail = _sum_pow(heads, q) ** r * 2.0 ** (-(J + 2) * n) / (1.0 - 2.0 ** -n)
    II_p += tail
    D_p += tail

    I, II, III = I_p ** (1 / p1), II_p ** (1 / p1), III_p ** (1 / p1)
    discretized = (I_p + D_p) ** (1 / p1)

    # exact L_{p1}(0, inf) norm of g on the finest breakpoint lattice
    fine = sizes[J]
    h = np.zeros(fine)
    for j in range(J + 1):
        h += np.repeat(rows[j].values ** q, 2 ** ((J - j) * n))[:fine]
    rearranged = _sum_pow(h ** (1 / q), p1) * 2.0 ** (-J * n)
    rearranged = rearranged ** (1 / p1)

    row_norms = np.array([_sum_pow(rows[j].values, p0) for j in range(J + 1)])
    b_norm = float(np.sum(2.0 ** (-np.arange(J + 1) * n) * row_norms ** (p1 / p0)) ** (1 / p1))
    f_norm = space_norm(gamma, SpaceSpec.triebel(p1, q, 0.0, n))

    # intermediate quantities of the three estimates
    T1_p = T3_p = 0.0
    for j in range(J + 1):
        A = B = 0.0
        l = 0
        while 2 ** (l * n) < sizes[j]:
            term = 2.0 ** (l * n) * star(j, 2 ** (l * n)) ** p0
            if l >= j:
                A += term
            else:
                B += term
            l += 1
        T1_p += 2.0 ** (-j * n) * A ** (p1 / p0)
        T3_p += 2.0 ** (-j * n) * B ** (p1 / p0)
    II_chain = float(np.sum(heads ** p1 * 2.0 ** (-np.arange(J + 1) * n)) ** (1 / p1))

    D = (1.0 - 2.0 ** -n) ** (-1.0 / p0)
    rc = r / (r - 1.0)
    sigma = p0 / q
    H1 = 1.0 if sigma == 1 else (1.0 - 2.0 ** (-n * beta * sigma / (sigma - 1))) ** (-(sigma - 1) / sigma)
    kappa = 1.0 - beta * p0 / q - p0 / p1
    t = p1 / p0
    tc = t / (t - 1.0)
    H6 = (1.0 - 2.0 ** (-n * kappa * tc)) ** (-1.0 / tc)
    H_II = (2.0 ** (n * beta * rc) - 1.0) ** (-(r - 1.0))
    G_II = 2.0 ** (n * (beta * r - 1.0)) / (1.0 - 2.0 ** (n * (beta * r - 1.0)))
    H_III = (1.0 - 2.0 ** (-n * delta * rc)) ** (-(r - 1.0))
    c_I = H1 ** (1 / q) * H6 ** (1 / p0)
    c_II = (H_II * G_II) ** (1 / p1)
    c_III = H_III ** (1 / p1)
    combine = ((step - 1.0) ** (1 / p1) * 2.0 ** (1 / q - 1 / p1)
               * 3.0 ** max(0.0, 1 / p1 - 1.0))
    chain = {"T1": T1_p ** (1 / p1), "T3": T3_p ** (1 / p1), "II_chain": II_chain,
             "block_constant": D}
    constants = {"I": c_I * D, "II": c_II, "III": c_III * D,
                 "I_to_T1": c_I, "II_to_chain": c_II, "III_to_T3": c_III,
                 "beta": beta, "delta": delta}
    return FrankeTerms(I, II, III, f_norm, b_norm, rearranged, discretized, combine,
                       chain, constants)


# --------------------------------------------------------------------------
# Jawerth chain
# --------------------------------------------------------------------------


def jawerth_epsilon(p0: ExponentFunction, p1: ExponentFunction, s0: SmoothnessFunction,
                    s1: SmoothnessFunction, box, samples: int = 1025) -> float:
    """Largest admissible epsilon: p1^- * inf(s0 - s1) / (2n)."""
    sep = separation_inf(s0, s1, box, samples)
    if not sep > 0:
        raise ValueError(f"smoothness functions are not separated (inf gap = {sep})")
    return p1.inf * sep / (2 * s0.dim)


def _exp(v, n):
    return v if isinstance(v, ExponentFunction) else constant_exponent(float(v), n)


def _smooth(v, n):
    return v if isinstance(v, SmoothnessFunction) else constant_smoothness(float(v), n)


@dataclass
class JawerthReport:
    norms: list
    ratios: list
    end_to_end: float
    telescoping_defect: float
    identity_defect: float
    epsilon: float
    aux: dict = field(default_factory=dict)


def _derived_smoothness(fn, lo, hi, n):
    return SmoothnessFunction(fn, inf=lo, sup=hi, dim=n)


def jawerth_chain(gamma: CoefficientField, p0, p1, q, s0, s1=None, eps: float | None = None,
                  L: int | None = None, tol: float = DEFAULT_TOL) -> JawerthReport:
    """Norms along f^{s0}_{p0,q} -> f^{s0}_{p0,inf} -> b^{sigma}_{(1+eps)p0,p0} -> b^{s1}_{p1,p0}.

    sigma = s0 - n/p0 + n/((1+eps)p0); the third norm is evaluated both with
    that smoothness and with s1 - n/p1 + n/((1+eps)p0), which agree under
    conjugacy (``identity_defect``). ``aux`` replays the proof of the middle
    step for gamma viewed in f^{(n/p0) eps/(1+eps)}_{p0,inf}: the function h,
    its cube infima h_{j,m}, the split of the key sum into I and II and the
    bounds connecting them.
    """
    if gamma.is_zero():
        raise ValueError("chain ratios are undefined for the zero field")
    n = gamma.n
    p0, p1, q = _exp(p0, n), _exp(p1, n), _exp(q, n)
    s0 = _smooth(s0, n)
    s1 = conjugate_smoothness(s0, p0, p1) if s1 is None else _smooth(s1, n)
    box = gamma.box
    eps_max = jawerth_epsilon(p0, p1, s0, s1, box)
    eps = eps_max if eps is None else float(eps)
    if not (0 < eps <= eps_max * (1 + 1e-12)):
        raise ValueError(f"epsilon must lie in (0, {eps_max}]")
    if L is None:
        const = all(g.is_constant for g in (p0, p1, q, s0, s1))
        L = gamma.J_max if const else gamma.J_max + 2
    grid = Grid(box, L)
    pe = p0.scaled(1.0 + eps)
    if np.any(grid.sample(pe) >= grid.sample(p1)):
        raise ValueError("(1 + eps) p0 < p1 fails on the grid")

    def sigma_from(s, p):
        es, ep, ee = s.evaluator, p.evaluator, pe.evaluator
        return _derived_smoothness(lambda x: es(x) - n / ep(x) + n / ee(x),
                                   s.inf - n / p.inf + n / pe.sup, s.sup - n / p.sup + n / pe.inf, n)

    sig0 = sigma_from(s0, p0)
    sig1 = sigma_from(s1, p1)
    if all(g.is_constant for g in (s0, p0, p1, s1)):
        sig0 = constant_smoothness(s0.constant - n / p0.constant + n / pe.constant, n)
        sig1 = constant_smoothness(s1.constant - n / p1.constant + n / pe.constant, n)

    inf_q = constant_exponent(math.inf, n)
    N1 = space_norm(gamma, SpaceSpec("triebel", p0, q, s0), L, tol)
    N2 = space_norm(gamma, SpaceSpec("triebel", p0, inf_q, s0), L, tol)
    N3 = space_norm(gamma, SpaceSpec("besov", pe, p0, sig0), L, tol)
    N3b = space_norm(gamma, SpaceSpec("besov", pe, p0, sig1), L, tol)
    N4 = space_norm(gamma, SpaceSpec("besov", p1, p0, s1), L, tol)
    norms = [N1, N2, N3, N4]
    ratios = [N2 / N1, N3 / N2, N4 / N3]
    end = N4 / N1
    tele = abs(ratios[0] * ratios[1] * ratios[2] - end) / end
    ident = abs(N3 - N3b) / max(N3, 1e-300)
    aux = _jawerth_aux(gamma, p0, eps, grid, tol)
    return JawerthReport(norms, ratios, end, tele, ident, eps, aux)


def _cube_reduce(values: np.ndarray, n: int, factor: int, fn) -> np.ndarray:
    """Reduce over blocks of ``factor`` cells per axis."""
    new = []
    for s in values.shape:
        new.extend([s // factor, factor])
    return fn(values.reshape(new), axis=tuple(range(1, 2 * n, 2)))


def _cube_min(values: np.ndarray, n: int, factor: int) -> np.ndarray:
    return _cube_reduce(values, n, factor, np.min)


def _spread(a, factor):
    for ax in range(a.ndim):
        a = np.repeat(a, factor, axis=ax)
    return a


def _jawerth_aux(gamma, p0, eps, grid: Grid, tol) -> dict:
    n = gamma.n
    L = grid.level
    vol = grid.cell_volume
    pv = grid.sample(p0)
    lam = eps / (1.0 + eps)
    weight = np.stack([np.exp2(j * n / pv * lam) for j in range(gamma.J_max + 1)])
    spread = np.stack([_spread(gamma.levels[j], 1 << (L - j)) for j in range(gamma.J_max + 1)])
    h = (weight * spread).max(axis=0)
    h_norm = luxemburg_norm(GridFunction(grid, h), p0, tol)
    f_side = space_norm(gamma, SpaceSpec("triebel", p0, constant_exponent(math.inf, n),
                                         _derived_smoothness(lambda x: n / p0.evaluator(x) * lam,
                                                             n / p0.sup * lam, n / p0.inf * lam, n)),
                        L, tol)
    hn = h / h_norm
    gn = [a / h_norm for a in gamma.levels]
    h_mod = float(modular_values(hn.ravel(), pv.ravel(), vol)[0])

    pos5_I = pos5_II = 0.0
    I_bound = 0.0
    target_mod = 0.0
    cprime = 1.0
    max_ratio_large = 0.0
    dominated = True
    for j in range(gamma.J_max + 1):
        f = 1 << (L - j)
        hjm = _cube_min(hn, n, f)
        hjm_cells = _spread(hjm, f)
        # gamma_{j,m} <= inf_y 2**(-jn eps/((1+eps) p0(y))) h(y)
        bound_cells = np.exp2(-j * n / pv * lam) * hn
        dominated &= bool(np.all(gn[j] <= _cube_min(bound_cells, n, f) * (1 + 1e-12)))
        small = hjm_cells <= 1.0
        powered = np.where(hjm_cells > 0, hjm_cells ** ((1 + eps) * pv), 0.0)
        pos5_I += 2.0 ** (-j * n * lam) * (powered[small].sum() * vol) ** (1 / (1 + eps))
        pos5_II += 2.0 ** (-j * n * lam) * (powered[~small].sum() * vol) ** (1 / (1 + eps))
        I_bound += 2.0 ** (-j * n * lam) * h_mod ** (1 / (1 + eps))
        large = hjm[hjm > 1.0]
        if large.size:
            max_ratio_large = max(max_ratio_large, float(large.max() / 2.0 ** (j * n / p0.inf)))
        g_cells = _spread(gn[j], f)
        tpow = np.where(g_cells > 0, g_cells ** ((1 + eps) * pv), 0.0)
        target_mod += (tpow.sum() * vol) ** (1 / (1 + eps))
        pmin = _cube_reduce(pv, n, f, np.min)
        pmax = _cube_reduce(pv, n, f, np.max)
        cprime = max(cprime, float(np.max(np.exp2(j * n * eps * (1.0 - pmin / pmax)))))
    pos5 = pos5_I + pos5_II
    modular_check = besov_mixed_modular(
        level_sequence(CoefficientField(n, gamma.J_max, gamma.box, gn),
                       SpaceSpec.besov(p0.scaled(1 + eps), p0, constant_smoothness(0.0, n), n), L),
        p0.scaled(1 + eps), p0, tol)
    return {
        "h_norm": h_norm,
        "f_norm_lifted": f_side,
        "h_modular": h_mod,
        "pos5": pos5,
        "I": pos5_I,
        "II": pos5_II,
        "I_bound": I_bound,
        "large_ratio": max_ratio_large,
        "target_modular": target_mod,
        "target_modular_mixed": modular_check,
        "cprime": cprime,
        "target_bound": cprime ** (1 / (1 + eps)) * pos5,
        "dominated": dominated,
    }


# --------------------------------------------------------------------------
# auxiliary inequality
# --------------------------------------------------------------------------


@dataclass
class AuxReport:
    lhs: float
    lhs_infinite: float
    l1: float
    ratio: float
    bound: float
    per_level: list


def aux_constant_bound(n: int, eps: float) -> float:
    """A constant C with lhs <= C ||phi|L_1|| for every step function phi.

    Derived by blocking the sorted cube infima dyadically against the
    rearrangement phi* and summing the resulting geometric series.
    """
    a = 2.0 ** (-n * eps / (1 + eps))
    return (1.0 + 2.0 ** (n / (1 + eps)) / (1.0 - a)) / (1.0 - 2.0 ** -n)


def check_aux_inequality(phi: GridFunction, eps: float, J_max: int | None = None) -> AuxReport:
    """sum_j 2**(-jn eps/(1+eps)) {sum_m |Q_{j,m}| (inf_{Q_{j,m}} phi)**(1+eps)}**(1/(1+eps)).

    Cubes are the dyadic cubes tiling the (integer-cornered) box of phi. For
    j beyond the grid level every cube lies in one cell, so the inner sum is
    the integral of phi**(1+eps); ``lhs_infinite`` adds that geometric tail
    in closed form, ``lhs`` stops at ``J_max`` (default: the grid level).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    grid = phi.grid
    if any(lo != round(lo) or hi != round(hi) for lo, hi in grid.box):
        raise ValueError("phi must live on a box with integer corners")
    n, L = grid.n, grid.level
    J_max = L if J_max is None else J_max
    vals = phi.values
    lam = eps / (1 + eps)
    per = []
    inner_fine = float(np.sum(vals ** (1 + eps)) * grid.cell_volume) ** (1 / (1 + eps))
    for j in range(min(J_max, L) + 1):
        mins = _cube_min(vals, n, 1 << (L - j))
        inner = float(np.sum(mins ** (1 + eps)) * 2.0 ** (-j * n)) ** (1 / (1 + eps))
        per.append(2.0 ** (-j * n * lam) * inner)
    lhs = sum(per)
    for j in range(L + 1, J_max + 1):
        lhs += 2.0 ** (-j * n * lam) * inner_fine
    a = 2.0 ** (-n * lam)
    lhs_inf = sum(per) + inner_fine * a ** (L + 1) / (1 - a)
    l1 = phi.integral()
    ratio = lhs_inf / l1 if l1 > 0 else 0.0
    return AuxReport(lhs, lhs_inf, l1, ratio, aux_constant_bound(n, eps), per)


# --------------------------------------------------------------------------
# variable-exponent Franke embedding
# --------------------------------------------------------------------------


class NormalizationError(ValueError):
    """Raised when the input is not normalized; ``factor`` is the norm to divide by."""

    def __init__(self, factor: float):
        super().__init__(f"field is not normalized: divide by {factor!r}")
        self.factor = factor


@dataclass
class FrankeVariableReport:
    r: int
    epsilon: float
    normalization: float
    level_mass: list
    level_bound: list
    I: float
    I_bound: float
    II: float
    II_midpoint: float
    max_large_ratio: float
    beta_f_norm: float
    beta_b_norm: float
    beta_b_closed_form: float
    terms: Optional[FrankeTerms]
    target_norm: float
    extra: dict = field(default_factory=dict)

    @property
    def per_level_ok(self) -> bool:
        return all(m <= b * (1 + 1e-9) for m, b in zip(self.level_mass, self.level_bound))


def default_r(p0: ExponentFunction, p1: ExponentFunction) -> int:
    """Smallest integer r with p1^+ / r <= min(1, p0^-)."""
    return max(1, math.ceil(p1.sup / min(1.0, p0.inf) - 1e-12))


def franke_epsilon(p0: ExponentFunction, p1: ExponentFunction, box, samples: int = 1025) -> float:
    """Half the smallest relative gap: eps = p0^- inf(1/p0 - 1/p1) / 2, so (1-eps) p1 > p0."""
    inv0, inv1 = p0.reciprocal(), p1.reciprocal()
    sep = separation_inf(inv0, inv1, box, samples)
    if not sep > 0:
        raise ValueError("p0 and p1 are not separated")
    return 0.5 * p0.inf * sep


def franke_variable_check(gamma: CoefficientField, p0, p1, s0=None, s1=None,
                          r: int | None = None, eps: float | None = None, L: int | None = None,
                          tol: float = DEFAULT_TOL, check_normalized: bool = True
                          ) -> FrankeVariableReport:
    """Replay the reduction of the variable Franke embedding to constant indices.

    Works with the lifted target smoothness 0: gamma is measured in
    b^{(n/p1) eps/(1-eps)}_{(1-eps)p1, p1}, which must have norm <= 1 (else
    :class:`NormalizationError` carries the factor). The report holds the
    per-level masses sum_m int_Q gamma**((1-eps)p1) against 2**(-jn eps),
    the terms I (gamma <= 1) and II (gamma > 1) of the f^0_{p1,p1/r} side in
    the L_r form, the midpoint sequences alpha, beta and both sides of the
    constant-index inequality for beta, computed via space norms, by
    closed form and through :func:`franke_terms`.

    If ``s1`` is given it must be constant; gamma is then lifted by 2**(j s1)
    first, which is an exact isometry onto the s1 = 0 setting. ``s0``
    (default: the conjugate of s1) is checked for conjugacy.
    """
    n = gamma.n
    p0, p1 = _exp(p0, n), _exp(p1, n)
    if math.isinf(p1.sup):
        raise ValueError("need p1^+ < inf")
    if s1 is not None or s0 is not None:
        s1 = constant_smoothness(0.0, n) if s1 is None else _smooth(s1, n)
        if not s1.is_constant:
            raise ValueError("only a constant s1 can be lifted exactly to 0")
        if s0 is not None:
            s0 = _smooth(s0, n)
            pts = Grid(gamma.box, max(gamma.J_max + 2, 6)).centers
            defect = np.max(np.abs(s0(pts) - n / p0(pts) - s1.constant + n / p1(pts)))
            if defect > 1e-8:
                raise ValueError(f"s0, s1 are not Sobolev conjugate (defect {defect:.3g})")
        if s1.constant != 0:
            gamma = CoefficientField(n, gamma.J_max, gamma.box,
                                     [a * 2.0 ** (j * s1.constant) for j, a in enumerate(gamma.levels)])
    r = default_r(p0, p1) if r is None else int(r)
    if r < 1 or p1.sup / r > min(1.0, p0.inf) + 1e-12:
        raise ValueError("r must satisfy p1^+/r <= min(1, p0^-)")
    eps_max = franke_epsilon(p0, p1, gamma.box)
    eps = eps_max if eps is None else float(eps)
    if not (0 < eps <= eps_max * (1 + 1e-12)):
        raise ValueError(f"epsilon must lie in (0, {eps_max}]")
    const = p0.is_constant and p1.is_constant
    if L is None:
        L = gamma.J_max if const else gamma.J_max + 2
    grid = Grid(gamma.box, L)
    vol = grid.cell_volume
    pv = grid.sample(p1)
    if np.any((1 - eps) * pv <= grid.sample(p0)):
        raise ValueError("(1 - eps) p1 > p0 fails on the grid")

    pl = p1.scaled(1 - eps)
    e1 = p1.evaluator
    s_norm = SmoothnessFunction(lambda x: n / e1(x) * eps / (1 - eps),
                                inf=n / p1.sup * eps / (1 - eps), sup=n / p1.inf * eps / (1 - eps),
                                dim=n, constant=None if not p1.is_constant
                                else n / p1.constant * eps / (1 - eps))
    N = space_norm(gamma, SpaceSpec("besov", pl, p1, s_norm), L, tol)
    if check_normalized and N > 1.0 + 10 * tol:
        raise NormalizationError(N)

    J = gamma.J_max
    mass, bound = [], []
    GI = np.zeros(grid.shape)
    GII = np.zeros(grid.shape)
    GII_mid = np.zeros(grid.shape)
    I_bound = 0.0
    max_large = 0.0
    alphas = []
    I_sum_levels = 0.0
    for j in range(J + 1):
        f = 1 << (L - j)
        g = _spread(gamma.levels[j], f)
        powered = np.where(g > 0, g ** ((1 - eps) * pv), 0.0)
        mass.append(float(powered.sum() * vol))
        bound.append(2.0 ** (-j * n * eps))
        small = g <= 1.0
        GI += np.where(small & (g > 0), g ** (pv / r), 0.0)
        I_sum_levels += float(np.where(small & (g > 0), g ** pv, 0.0).sum() * vol) ** (1 / r)
        I_bound += 2.0 ** (-j * n * eps / r)
        big = g > 1.0
        GII += np.where(big, g ** (pv / r), 0.0)
        # midpoint exponent of each cube Q_{j,m}
        centers = _cube_centers(gamma, j)
        p_mid = np.asarray(p1(centers), dtype=float).reshape(gamma.levels[j].shape)
        gl = gamma.levels[j]
        alpha = np.where(gl > 1.0, gl ** p_mid, 0.0)
        alphas.append(alpha)
        GII_mid += _spread(np.where(alpha > 1.0, alpha ** (1.0 / r), 0.0), f)
        if np.any(gl > 1.0):
            max_large = max(max_large, float(gl[gl > 1.0].max() / 2.0 ** (j * n / p1.inf)))

    def lr(v):
        top = v.max()
        if top == 0:
            return 0.0
        return float(top * (np.sum((v / top) ** r) * vol) ** (1.0 / r))

    I, II, II_mid = lr(GI), lr(GII), lr(GII_mid)
    beta = CoefficientField(n, J, gamma.box, [np.where(a > 1.0, a ** (1.0 / r), 0.0) for a in alphas])
    bf = space_norm(beta, SpaceSpec.triebel(r, 1.0, 0.0, n))
    bb = space_norm(beta, SpaceSpec.besov((1 - eps) * r, r, n * eps / (r * (1 - eps)), n))
    closed = sum(2.0 ** (-j * n) * _sum_pow(a[a > 1.0], 1 - eps) ** (1 / (1 - eps))
                 for j, a in enumerate(alphas)) ** (1.0 / r)
    terms = None if beta.is_zero() else franke_terms(beta, (1 - eps) * r, r, 1.0)
    target = space_norm(gamma, SpaceSpec("triebel", p1, p1.scaled(1.0 / r),
                                         constant_smoothness(0.0, n)), L, tol)
    extra = {"I_levelwise": I_sum_levels, "target_Lr": lr(GI + GII)}
    if const and not gamma.is_zero():
        direct = franke_terms(gamma, p0.constant, p1.constant, p1.constant / r)
        extra["direct_terms"] = direct
        extra["direct_defect"] = abs(direct.f_norm - target) / max(target, 1e-300)
    return FrankeVariableReport(r, eps, N, mass, bound, I, I_bound, II, II_mid, max_large,
                                bf, bb, closed, terms, target, extra)


def _cube_centers(gamma: CoefficientField, j: int) -> np.ndarray:
    shape = gamma.levels[j].shape
    off = gamma.offset(j)
    axes = [(np.arange(s) + off[i] + 0.5) * 2.0 ** -j for i, s in enumerate(shape)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
