"""Regenerate the files in src/dualpolar/data/.

    python3 tools/make_data.py

Deterministic: fixed seeds throughout. Each group file is checked after it
is written.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from dualpolar.canon import automorphisms
from dualpolar.formats import GroupFile, serialize_ovoid, write_group
from dualpolar.geometry import build_dual_polar
from dualpolar.groups import enumerate_elements, matrix_from_permutation, perm_order, random_isometry
from dualpolar.polar import form_make
from dualpolar.search import induce_permutations, search

DATA = Path(__file__).resolve().parent.parent / "src" / "dualpolar" / "data"


def mat_power(F, g, e):
    h = np.eye(len(g), dtype=np.int64)
    for _ in range(e):
        h = F.matmul(h, g)
    return h


def involution(G, seed, orbits=None):
    """First involution from random isometries, optionally with a given number of point orbits."""
    rng = np.random.default_rng(seed)
    F = G.form.field
    while True:
        g = random_isometry(G.form, rng)
        o = perm_order(induce_permutations(G, [g]).perms[0])
        if o % 2 == 0:
            h = mat_power(F, g, o // 2)
            if orbits is None or len(induce_permutations(G, [h]).orbits) == orbits:
                return h


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)

    dq63 = build_dual_polar(form_make("Q", 3, 3))
    cert = search(dq63, 2, mode="first").certificates[0]
    (DATA / "dq63_hemisystem.ovd").write_bytes(serialize_ovoid(cert.geom_hash, 2, cert.members))

    gens, order = automorphisms(dq63, cert)
    assert order == 120, order
    mats = [matrix_from_permutation(dq63, p) for p in gens]
    write_group(GroupFile(3, 7, mats, [0] * len(mats)), DATA / "dq63_stab120.grp")
    assert len(enumerate_elements(induce_permutations(dq63, mats).perms, dq63.n)) == 120

    h = involution(dq63, 5)
    write_group(GroupFile(3, 7, [h], [0]), DATA / "dq63_involution.grp")

    dw53 = build_dual_polar(form_make("W", 3, 3))
    h = involution(dw53, 5, 640)
    write_group(GroupFile(3, 6, [h], [0]), DATA / "dw53_involution.grp")

    # unipotent element of order 5 in O(7,5): e2 -> e2 + e3, e4 -> e4 - e1
    g = np.eye(7, dtype=np.int64)
    g[2, 3] = 1
    g[4, 1] = 4
    write_group(GroupFile(5, 7, [g], [0]), DATA / "dq65_order5.grp")


if __name__ == "__main__":
    main()
