"""Coefficient-field generator families for embedding-constant searches.

Every builder has the signature ``builder(J, params, rng, n, box)`` and
returns a :class:`CoefficientField` with ``J_max == J``. Builders draw all
randomness from ``rng``, so a fixed seed reproduces the field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..spaces import CoefficientField, default_box

__all__ = ["GeneratorFamily", "FAMILIES", "get_family", "family_ids"]


@dataclass(frozen=True)
class GeneratorFamily:
    id: str
    builder: Callable
    description: str
    deterministic: bool = False
    params: dict = field(default_factory=dict)

    def build(self, J: int, rng: np.random.Generator, n: int = 1, box=None) -> CoefficientField:
        box = default_box(n) if box is None else box
        return self.builder(J, dict(self.params), rng, n, box)

    def with_params(self, **params) -> "GeneratorFamily":
        merged = {**self.params, **params}
        return GeneratorFamily(self.id, self.builder, self.description, self.deterministic, merged)


def _empty_levels(J, n, box):
    fld = CoefficientField(n, J, box)
    return fld, [np.zeros(fld.level_shape(j)) for j in range(J + 1)]


def single_coefficient(J, params, rng, n, box):
    fld, levels = _empty_levels(J, n, box)
    j = int(params.get("j", J))
    shape = levels[j].shape
    if "m" in params:
        idx = tuple(np.atleast_1d(params["m"]) - fld.offset(j))
    else:
        idx = tuple(int(rng.integers(s)) for s in shape)
    levels[j][idx] = float(params.get("value", 1.0))
    return CoefficientField(n, J, fld.box, levels)


def flat_row(J, params, rng, n, box):
    """k ones at distinct random cubes of level J (k random unless given)."""
    fld, levels = _empty_levels(J, n, box)
    row = levels[J].reshape(-1)
    k = int(params.get("k", rng.integers(1, row.size + 1)))
    row[rng.choice(row.size, size=min(k, row.size), replace=False)] = 1.0
    return CoefficientField(n, J, fld.box, levels)


def lacunary_diagonal(J, params, rng, n, box):
    """One unit per level on pairwise disjoint cubes Q_{j, m_j}.

    Along the first axis the cubes are [lo + 2**-j, lo + 2**(1-j)), so they
    never overlap; the remaining axes sit in the lowest cube.
    """
    fld, levels = _empty_levels(J, n, box)
    if fld.box[0][1] - fld.box[0][0] < 2:
        raise ValueError("lacunary_diagonal needs a box of width >= 2 along the first axis")
    for j in range(J + 1):
        idx = [0] * n
        idx[0] = 1
        levels[j][tuple(idx)] = float(params.get("value", 1.0))
    return CoefficientField(n, J, fld.box, levels)


def random_sparse(J, params, rng, n, box):
    """Each cube of each level is active with probability ``density``.

    Active values are log-uniform over ``spread`` binary orders of magnitude,
    and each level is rescaled by 2**(-j * level_decay) (default: a random
    decay in [0, n]), so different levels compete in the norms.
    """
    fld, levels = _empty_levels(J, n, box)
    density = float(params.get("density", rng.uniform(0.02, 0.5)))
    spread = float(params.get("spread", 4.0))
    decay = float(params.get("level_decay", rng.uniform(0.0, n)))
    for j in range(J + 1):
        mask = rng.random(levels[j].shape) < density
        vals = np.exp2(rng.uniform(-spread, 0.0, levels[j].shape) - j * decay)
        levels[j] = np.where(mask, vals, 0.0)
    if all(not np.any(a) for a in levels):
        levels[J].reshape(-1)[rng.integers(levels[J].size)] = 1.0
    return CoefficientField(n, J, fld.box, levels)


def rearrangement_extremal(J, params, rng, n, box):
    """Rows built from dyadic blocks: 2**(l n) entries of size 2**(-l n / p_ref).

    This makes gamma*_{j, 2**(l n)} nonzero for every l that fits, so all the
    index patterns gamma*_{j, 2**((j-k) n)} of the dyadic discretization are
    active. Block values are placed at random positions of the row; levels
    are kept with probability 1/2 (the top level always) and weighted by
    2**(-j * level_decay).
    """
    fld, levels = _empty_levels(J, n, box)
    p_ref = float(params.get("p_ref", rng.uniform(0.5, 4.0)))
    decay = float(params.get("level_decay", rng.uniform(0.0, n)))
    for j in range(J + 1):
        if j < J and rng.random() < 0.5:
            continue
        size = levels[j].size
        vals = []
        l = 0
        while len(vals) < size:
            block = min(2 ** (l * n) - (2 ** ((l - 1) * n) if l else 0), size - len(vals))
            vals.extend([2.0 ** (-l * n / p_ref)] * block)
            l += 1
        vals = np.array(vals) * 2.0 ** (-j * decay)
        levels[j] = rng.permutation(vals).reshape(levels[j].shape)
    return CoefficientField(n, J, fld.box, levels)


def gap_chaser(J, params, rng, n, box):
    """Mass on every cube within r_j = r0 * 2**(-j * rate) of ``focus``.

    Amplitudes are 2**(-j * amplitude_decay) times a random factor in
    [1/2, 1]; used to probe regions where a smoothness gap closes.
    """
    fld, levels = _empty_levels(J, n, box)
    focus = np.broadcast_to(np.asarray(params.get("focus", 0.0), dtype=float), (n,))
    r0 = float(params.get("r0", 1.0))
    rate = float(params.get("rate", 1.0))
    decay = float(params.get("amplitude_decay", 0.0))
    for j in range(J + 1):
        shape = levels[j].shape
        axes = [(np.arange(s) + fld.offset(j)[i] + 0.5) * 2.0 ** -j for i, s in enumerate(shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        dist = np.sqrt(sum((m - f) ** 2 for m, f in zip(mesh, focus)))
        radius = max(r0 * 2.0 ** (-j * rate), 2.0 ** -j * 0.5 * np.sqrt(n))
        near = dist <= radius
        levels[j] = np.where(near, rng.uniform(0.5, 1.0, shape), 0.0) * 2.0 ** (-j * decay)
    return CoefficientField(n, J, fld.box, levels)


FAMILIES = {
    "single_coefficient": GeneratorFamily(
        "single_coefficient", single_coefficient, "one unit coefficient at a random cube of level J"),
    "flat_row": GeneratorFamily("flat_row", flat_row, "k unit coefficients at level J"),
    "lacunary_diagonal": GeneratorFamily(
        "lacunary_diagonal", lacunary_diagonal, "one unit per level on disjoint cubes",
        deterministic=True),
    "random_sparse": GeneratorFamily(
        "random_sparse", random_sparse, "random sparse field, log-uniform values"),
    "rearrangement_extremal": GeneratorFamily(
        "rearrangement_extremal", rearrangement_extremal,
        "dyadic-block rows activating every rearrangement breakpoint"),
    "gap_chaser": GeneratorFamily(
        "gap_chaser", gap_chaser, "mass concentrating at a focus point as j grows"),
}


def family_ids() -> list:
    return list(FAMILIES)


def get_family(spec) -> GeneratorFamily:
    """Look up a family by id, or by a dict ``{"id": ..., **params}``."""
    if isinstance(spec, GeneratorFamily):
        return spec
    if isinstance(spec, str):
        spec = {"id": spec}
    spec = dict(spec)
    fid = spec.pop("id")
    if fid not in FAMILIES:
        raise ValueError(f"unknown generator family {fid!r}; expected one of {family_ids()}")
    return FAMILIES[fid].with_params(**spec) if spec else FAMILIES[fid]
