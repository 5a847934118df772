"""Equivalence of point sets via canonical labelling of the coloured incidence graph.

Vertices are the points followed by the lines; the colour classes are
(points in the set, points outside it, lines). Two sets are equivalent when
some automorphism of the incidence structure maps one onto the other, which
is exactly when their coloured graphs have the same canonical form.
Canonical labelling is done by nauty (through pynauty). When every triangle of
the collinearity graph lies on a line (true in any near polygon) the graph
determines the lines, so its automorphisms are those of the incidence
structure; nauty is then run on the much easier collinearity graph and the
canonical bytes are the relabelled incidence structure itself.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import pynauty

from .geometry import Geometry
from .groups import enumerate_elements, order_profile
from .ovoid import OvoidCertificate
from .search import PrescribedGroup


class CanonError(RuntimeError):
    pass


def _members(cert) -> list[int]:
    return list(cert.members) if isinstance(cert, OvoidCertificate) else [int(x) for x in cert]


def incidence_graph(G: Geometry, members) -> tuple[pynauty.Graph, list[int]]:
    """Coloured point-line incidence graph; also returns the class sizes."""
    inside = set(members)
    adj: dict[int, list[int]] = {G.n + j: list(ln) for j, ln in enumerate(G.lines)}
    colours = [inside, set(range(G.n)) - inside, set(range(G.n, G.n + len(G.lines)))]
    sizes = [len(c) for c in colours]
    g = pynauty.Graph(G.n + len(G.lines), directed=False, adjacency_dict=adj,
                      vertex_coloring=[c for c in colours if c])
    return g, sizes


def lines_from_graph(G: Geometry) -> bool:
    """True when the lines are exactly the maximal cliques of the collinearity graph."""
    cached = G.__dict__.get("_lines_from_graph")
    if cached is None:
        A = G.adjacency.astype(np.int64)
        triangles = int((A @ A).multiply(A).sum()) // 6
        k = G.s + 1
        cached = triangles == len(G.lines) * k * (k - 1) * (k - 2) // 6
        G.__dict__["_lines_from_graph"] = cached
    return cached


def collinearity_graph(G: Geometry, members) -> pynauty.Graph:
    inside = set(members)
    colours = [inside, set(range(G.n)) - inside]
    adj = {x: G.neighbors[x].tolist() for x in range(G.n)}
    return pynauty.Graph(G.n, directed=False, adjacency_dict=adj,
                         vertex_coloring=[c for c in colours if c])


def canonical_form(G: Geometry, cert) -> bytes:
    """Bytes that agree exactly for equivalent (geometry, set) pairs."""
    members = _members(cert)
    if lines_from_graph(G):
        lab = pynauty.canon_label(collinearity_graph(G, members))
        pos = np.empty(G.n, dtype=np.int64)
        pos[np.array(lab)] = np.arange(G.n)
        rel = np.sort(pos[G.line_array], axis=1)
        rel = rel[np.lexsort(rel.T[::-1])]
        head = f"CIG {G.n} {len(G.lines)} {len(members)}\n".encode()
        return head + rel.astype("<u4").tobytes()
    g, sizes = incidence_graph(G, members)
    head = ("CIB " + " ".join(map(str, sizes)) + "\n").encode()
    return head + pynauty.certificate(g)


def canonical_digest(G: Geometry, cert) -> str:
    return hashlib.sha256(canonical_form(G, cert)).hexdigest()


@dataclass
class Classification:
    classes: list[list[int]]  # indices into the input list, each class sorted
    digests: list[str]

    @property
    def count(self) -> int:
        return len(self.classes)

    @property
    def representatives(self) -> list[int]:
        return [c[0] for c in self.classes]


def classify(G: Geometry, certs) -> Classification:
    by_form: dict[bytes, list[int]] = {}
    for i, c in enumerate(certs):
        by_form.setdefault(canonical_form(G, c), []).append(i)
    # order classes by canonical bytes so the result ignores input order
    keys = sorted(by_form)
    return Classification([by_form[k] for k in keys], [hashlib.sha256(k).hexdigest() for k in keys])


def automorphisms(G: Geometry, members=None) -> tuple[list[np.ndarray], int]:
    """Generators (as point permutations) and order of the set-stabilising automorphism group."""
    pts = [] if members is None else _members(members)
    g = collinearity_graph(G, pts) if lines_from_graph(G) else incidence_graph(G, pts)[0]
    gens, size1, size2, _, _ = pynauty.autgrp(g)
    order = int(round(size1 * 10 ** size2))
    return [np.array(p[:G.n], dtype=np.int64) for p in gens], order


@dataclass
class StabilizerReport:
    order: int
    group_order: int
    element_orders: dict[int, int]
    elements: list[np.ndarray]

    def lines(self) -> list[str]:
        prof = " ".join(f"{k}:{v}" for k, v in self.element_orders.items())
        return [f"group_order {self.group_order}", f"stabilizer_order {self.order}",
                f"element_orders {prof}"]


def stabilizer_in_group(G: Geometry, cert, group: PrescribedGroup | list,
                        cap: int = 1_000_000) -> StabilizerReport:
    """Setwise stabiliser of the set inside the given group, by filtering all elements."""
    perms = group.perms if isinstance(group, PrescribedGroup) else list(group)
    elements = enumerate_elements(perms, G.n, cap)
    inside = np.zeros(G.n, dtype=bool)
    inside[_members(cert)] = True
    stab = [e for e in elements if np.array_equal(inside[e], inside)]
    return StabilizerReport(len(stab), len(elements), order_profile(stab), stab)
