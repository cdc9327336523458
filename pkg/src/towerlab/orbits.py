"""Orbits of punctured transfer-kernel quartets under S_3 x S_3.

A punctured quartet is (k1,k2,k3;k4) with entries in [0,4]: value k in
1..4 marks a one-dimensional kernel equal to the k-th distinguished
order-3 subgroup, value 0 a two-dimensional kernel.  One S_3 permutes the
values 1,2,3 (fixing 0 and 4), the other permutes the positions 1,2,3
(fixing position 4).  Only the orbit is an isomorphism invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product
from typing import Optional

PERMS3 = list(permutations((1, 2, 3)))


def act(q, sigma, tau):
    """Apply (sigma, tau): entry i of the result is sigma~(q[tau^(i)]).

    sigma and tau are permutations of (1,2,3) given as 3-tuples;
    sigma~ extends sigma by fixing 0 and 4, tau^ fixes position 4.
    """
    def sig(v):
        return sigma[v - 1] if 1 <= v <= 3 else v

    out = [sig(q[tau[i] - 1]) for i in range(3)]
    out.append(sig(q[3]))
    return tuple(out)


def orbit_of(q):
    """The full S_3 x S_3 orbit of a quartet, as a sorted tuple."""
    seen = {act(q, s, t) for s in PERMS3 for t in PERMS3}
    return tuple(sorted(seen))


def occupation(q):
    """o(kappa): how many entries take each value 0..4."""
    return tuple(sum(1 for x in q if x == v) for v in range(5))


def mu_nu(q):
    """(number of entries equal to 4, number of entries equal to 0)."""
    return sum(1 for x in q if x == 4), sum(1 for x in q if x == 0)


def taussky(q):
    """Coarse type quartet over {A,B}: A iff i=4 or the kernel meets H_i.

    Combinatorial rule: position 4 is always A; elsewhere A iff the entry
    is 0 or 4.  (Cross-checked against the subgroup meet on pc-groups.)
    """
    return "".join("A" if (i == 3 or q[i] in (0, 4)) else "B"
                   for i in range(4))


@dataclass(frozen=True)
class OrbitRecord:
    representative: tuple         # lexicographically least member
    cardinality: int
    occupation: tuple             # occupation numbers of the representative
    mu: int
    nu: int
    taussky: str                  # Taussky quartet of the representative
    label: Optional[str] = None   # section.number tag when a table row matches
    realized: Optional[str] = None

    def key(self):
        return self.representative


def all_quartets():
    return [q for q in product(range(5), repeat=4)]


def classify_all(label_table=None):
    """Partition all 5^4 punctured quartets into S_3 x S_3 orbits.

    Returns OrbitRecords sorted by representative.  label_table, when
    given, maps orbits to their table row (see towerlab.fixtures).
    """
    seen = set()
    records = []
    for q in all_quartets():
        if q in seen:
            continue
        orb = orbit_of(q)
        seen.update(orb)
        rep = orb[0]
        mu, nu = mu_nu(rep)
        label = realized = None
        if label_table is not None:
            row = label_table.get(rep)
            if row is not None:
                label = row.label
                realized = row.realized
        records.append(OrbitRecord(
            representative=rep,
            cardinality=len(orb),
            occupation=occupation(rep),
            mu=mu,
            nu=nu,
            taussky=taussky(rep),
            label=label,
            realized=realized,
        ))
    records.sort(key=lambda r: r.representative)
    return records


def orbit_label(q, label_table):
    """Canonical representative and table label ('unlisted' when absent)."""
    rep = orbit_of(q)[0]
    row = label_table.get(rep)
    return rep, (row.label if row is not None else "unlisted")


def format_quartet(q):
    return "(%d%d%d;%d)" % q


def parse_quartet(s):
    s = s.strip().lstrip("(").rstrip(")")
    head, tail = s.split(";")
    vals = [int(c) for c in head] + [int(tail)]
    if len(vals) != 4 or any(not 0 <= v <= 4 for v in vals):
        raise ValueError("bad quartet %r" % s)
    return tuple(vals)
