"""Arithmetic for finite 3-groups given by weighted power-commutator
presentations.

A presentation has generators a_1..a_n, each with a positive integer weight,
a power relation a_i^3 = w_i and commutator relations [a_j, a_i] = w_{ji}
(j > i), where every right-hand side is a normal word in generators of index
larger than max(i, j).  Elements are exponent vectors with entries in [0,3);
multiplication works by collection from the left.

The group order is exactly 3^n once the consistency (associativity) tests
pass; `check_consistency` runs them.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from itertools import product

from . import _linalg

P = 3
STEP_BUDGET = 10_000_000


class CollectionBudgetExceeded(RuntimeError):
    """Collection did not terminate within the step budget."""


class MalformedPresentation(ValueError):
    """Structural violation of the weighted presentation conditions."""


class NonNormalSubgroup(ValueError):
    pass


def _word_ok(word, lo):
    return all(g > lo and e in (1, 2) for g, e in word)


class PcGroup:
    """A finite 3-group on a consistent weighted pc-presentation.

    Immutable after construction; lazily filled caches sit behind a lock so
    instances can be shared between worker threads.
    """

    def __init__(self, weights, power, comm, defs=None, consistent=False):
        self.n = len(weights)
        self.p = P
        self.weights = tuple(weights)
        self.power = tuple(tuple(w) for w in power)
        cm = [[None] * self.n for _ in range(self.n)]
        for (j, i), w in comm.items():
            if not j > i:
                raise MalformedPresentation("commutator key must have j > i")
            cm[j][i] = tuple(w)
        self._comm = cm
        # defs[k]: how generator k arises: ('img', x), ('p', i) or ('c', j, i)
        self.defs = list(defs) if defs is not None else None
        self.consistent = consistent
        self._lock = threading.Lock()
        self._inv_words = [None] * self.n
        self._cache = {}
        self._validate()

    # -- structure ---------------------------------------------------------

    def _validate(self):
        w = self.weights
        if list(w) != sorted(w):
            raise MalformedPresentation("generators must be sorted by weight")
        for i, pw in enumerate(self.power):
            if not _word_ok(pw, i):
                raise MalformedPresentation("power rhs of a%d" % (i + 1))
            if any(w[g] < w[i] + 1 for g, _ in pw):
                raise MalformedPresentation("power rhs weight of a%d" % (i + 1))
        for j in range(self.n):
            for i in range(j):
                cw = self._comm[j][i]
                if cw is None:
                    continue
                if not _word_ok(cw, j):
                    raise MalformedPresentation("comm rhs of [a%d,a%d]" % (j + 1, i + 1))
                if any(w[g] < w[i] + w[j] for g, _ in cw):
                    raise MalformedPresentation(
                        "comm rhs weight of [a%d,a%d]" % (j + 1, i + 1))

    @property
    def order(self):
        return P ** self.n

    @property
    def order_log(self):
        return self.n

    def comm_word(self, j, i):
        w = self._comm[j][i]
        return () if w is None else w

    def identity(self):
        return (0,) * self.n

    def gen(self, i):
        v = [0] * self.n
        v[i] = 1
        return tuple(v)

    def gens(self):
        return [self.gen(i) for i in range(self.n)]

    # -- collection --------------------------------------------------------

    def collect(self, word):
        """Normal form of a raw word (sequence of (gen, exp), exp any int)."""
        ev = [0] * self.n
        self._collect_into(ev, self._expand(word))
        return tuple(ev)

    def _expand(self, word):
        """Flatten to a reversed stack of (gen, exp) letters, exp in {1,2}."""
        letters = []
        for g, e in word:
            if not 0 <= g < self.n:
                raise MalformedPresentation("generator index %d" % g)
            if e == 0:
                continue
            if e < 0:
                inv = self._inv_word(g)
                for _ in range(-e):
                    letters.extend(inv)
            else:
                q, r = divmod(e, 2)
                letters.extend([(g, 2)] * q)
                if r:
                    letters.append((g, 1))
        letters.reverse()
        return letters

    def _inv_word(self, g):
        w = self._inv_words[g]
        if w is None:
            with self._lock:
                w = self._inv_words[g]
                if w is None:
                    w = ((g, 2),) + self._word_inverse(self.power[g])
                    self._inv_words[g] = w
        return w

    def _word_inverse(self, word):
        out = []
        for g, e in reversed(word):
            inv = self._inv_word(g)
            for _ in range(e):
                out.extend(inv)
        return tuple(out)

    def _collect_into(self, ev, stack):
        n = self.n
        power = self.power
        comm = self._comm
        maxnz = -1
        for i in range(n - 1, -1, -1):
            if ev[i]:
                maxnz = i
                break
        steps = 0
        while stack:
            steps += 1
            if steps > STEP_BUDGET:
                raise CollectionBudgetExceeded(
                    "collection exceeded %d steps" % STEP_BUDGET)
            g, e = stack.pop()
            if maxnz <= g:
                # no letters to the right of position g
                c = ev[g] + e
                if c >= P:
                    ev[g] = c - P
                    pw = power[g]
                    if pw:
                        stack.extend(reversed(pw))
                else:
                    ev[g] = c
                if ev[g]:
                    if g > maxnz:
                        maxnz = g
                elif maxnz == g:
                    maxnz = -1
                    for i in range(g - 1, -1, -1):
                        if ev[i]:
                            maxnz = i
                            break
            else:
                if e == 2:
                    stack.append((g, 1))
                tail = [(j, ev[j]) for j in range(g + 1, maxnz + 1) if ev[j]]
                for j, _ in tail:
                    ev[j] = 0
                c = ev[g] + 1
                overflow = c >= P
                ev[g] = c - P if overflow else c
                conj = []
                for j, f in tail:
                    w = comm[j][g]
                    for _ in range(f):
                        conj.append((j, 1))
                        if w:
                            conj.extend(w)
                stack.extend(reversed(conj))
                if overflow:
                    pw = power[g]
                    if pw:
                        stack.extend(reversed(pw))
                if ev[g]:
                    maxnz = g
                else:
                    maxnz = -1
                    for i in range(g - 1, -1, -1):
                        if ev[i]:
                            maxnz = i
                            break

    # -- element arithmetic ------------------------------------------------

    @staticmethod
    def letters(vec):
        return tuple((i, e) for i, e in enumerate(vec) if e)

    def mult(self, u, v):
        ev = list(u)
        self._collect_into(ev, self._expand(self.letters(v)))
        return tuple(ev)

    def inverse(self, u):
        return self.collect(self._word_inverse(self.letters(u)))

    def elt_pow(self, u, k):
        if k < 0:
            return self.elt_pow(self.inverse(u), -k)
        acc = self.identity()
        base = u
        while k:
            if k & 1:
                acc = self.mult(acc, base)
            base = self.mult(base, base)
            k >>= 1
        return acc

    def conj(self, u, h):
        return self.mult(self.mult(self.inverse(h), u), h)

    def commutator(self, u, v):
        w = self.mult(self.mult(self.inverse(u), self.inverse(v)),
                      self.mult(u, v))
        return w

    def elt_order(self, u):
        k = 1
        while any(u):
            u = self.elt_pow(u, P)
            k *= P
        return k

    def evaluate(self, word, images):
        """Value of a raw word under a map generator-index -> element."""
        acc = self.identity()
        for g, e in word:
            acc = self.mult(acc, self.elt_pow(images[g], e))
        return acc

    def elements(self, limit=None):
        if limit is not None and self.order > limit:
            raise ValueError("group too large to enumerate")
        return [tuple(reversed(v))
                for v in product(range(P), repeat=self.n)]

    # -- consistency -------------------------------------------------------

    def consistency_failures(self, weight_bound=None, stop_at=None):
        """Associativity/power overlap test words that fail to agree.

        weight_bound, when given, skips tests whose combined weight exceeds
        it (sound for presentations of p-class < weight_bound).
        """
        crit = []
        n = self.n
        w = self.weights
        g = self.gens()

        def keep(total):
            return weight_bound is None or total <= weight_bound

        fails = []
        for i in range(n):
            if keep(2 * w[i] + 1):
                lhs = self.mult(self.elt_pow(g[i], P), g[i])
                rhs = self.mult(g[i], self.elt_pow(g[i], P))
                if lhs != rhs:
                    fails.append(("power-self", i, lhs, rhs))
            if stop_at and len(fails) >= stop_at:
                return fails
        for j in range(n):
            for i in range(j):
                if keep(w[i] + w[j] + 1):
                    lhs = self.mult(self.elt_pow(g[j], P), g[i])
                    rhs = self.mult(self.elt_pow(g[j], P - 1),
                                    self.mult(g[j], g[i]))
                    if lhs != rhs:
                        fails.append(("power-left", j, i, lhs, rhs))
                    lhs = self.mult(g[j], self.elt_pow(g[i], P))
                    rhs = self.mult(self.mult(g[j], g[i]),
                                    self.elt_pow(g[i], P - 1))
                    if lhs != rhs:
                        fails.append(("power-right", j, i, lhs, rhs))
                if stop_at and len(fails) >= stop_at:
                    return fails
        for k in range(n):
            for j in range(k):
                for i in range(j):
                    if keep(w[i] + w[j] + w[k]):
                        lhs = self.mult(self.mult(g[k], g[j]), g[i])
                        rhs = self.mult(g[k], self.mult(g[j], g[i]))
                        if lhs != rhs:
                            fails.append(("assoc", k, j, i, lhs, rhs))
                if stop_at and len(fails) >= stop_at:
                    return fails
        return fails

    def check_consistency(self, weight_bound=None):
        """Run all test words; returns (ok, failures) and sets the flag."""
        fails = self.consistency_failures(weight_bound=weight_bound)
        if not fails:
            self.consistent = True
        return not fails, fails

    # -- subgroups and series ----------------------------------------------

    def subgroup(self, generators, normal=False):
        return Subgroup(self, generators, normal_closure=normal)

    def trivial_subgroup(self):
        return Subgroup(self, [])

    def full_subgroup(self):
        return Subgroup(self, self.gens())

    def derived_subgroup(self):
        def build():
            gens = [self.commutator(self.gen(i), self.gen(j))
                    for j in range(self.n) for i in range(j)]
            return Subgroup(self, gens, normal_closure=True)
        return self._cached("derived", build)

    def lower_central(self, i):
        """gamma_i: gamma_1 = G, gamma_{k+1} = [gamma_k, G]."""
        if i < 1:
            raise ValueError("lower central series starts at 1")
        series = self._cached("lcs", lambda: [self.full_subgroup()])
        with self._lock:
            while len(series) < i and series[-1].rank > 0:
                prev = series[-1]
                gens = [self.commutator(u, self.gen(k))
                        for u in prev.pcgs for k in range(self.n)]
                series.append(Subgroup(self, gens, normal_closure=True))
        return series[min(i, len(series)) - 1]

    def nilpotency_class(self):
        c = 1
        while self.lower_central(c + 1).rank > 0:
            c += 1
        return c if self.n else 0

    def lower_exp_p_central(self, i):
        """P_i: P_0 = G, P_{k+1} = [P_k, G] P_k^3."""
        if i < 0:
            raise ValueError("index must be nonnegative")
        series = self._cached("lpcs", lambda: [self.full_subgroup()])
        with self._lock:
            while len(series) <= i and series[-1].rank > 0:
                prev = series[-1]
                gens = [self.commutator(u, self.gen(k))
                        for u in prev.pcgs for k in range(self.n)]
                gens += [self.elt_pow(u, P) for u in prev.pcgs]
                series.append(Subgroup(self, gens, normal_closure=True))
        return series[min(i, len(series) - 1)]

    def p_class(self):
        c = 0
        while self.lower_exp_p_central(c).rank > 0:
            c += 1
        return c - 1 if self.n else 0

    def frattini(self):
        return self.lower_exp_p_central(1)

    def derived_length(self):
        sub = self.full_subgroup()
        dl = 0
        while sub.rank > 0:
            gens = [self.commutator(u, v)
                    for u in sub.pcgs for v in sub.pcgs]
            sub = Subgroup(self, gens, normal_closure=True)
            dl += 1
        return dl

    def _cached(self, key, build):
        if key not in self._cache:
            with self._lock:
                if key not in self._cache:
                    self._cache[key] = build()
        return self._cache[key]

    # -- quotients -----------------------------------------------------------

    def quotient(self, sub):
        """Consistent presentation of G/N plus the projection map.

        N must be normal (verified by conjugating its basis).
        """
        if sub.owner is not self:
            raise ValueError("subgroup belongs to a different group")
        if not sub.is_normal():
            raise NonNormalSubgroup("quotient by a non-normal subgroup")
        depths = set(sub.depths)
        surviving = [i for i in range(self.n) if i not in depths]

        def project(vec):
            red = sub.coset_representative(vec)
            return tuple(red[i] for i in surviving)

        power = []
        comm = {}
        for old_i in surviving:
            power.append(PcGroup.letters(project(
                self.elt_pow(self.gen(old_i), P))))
        for new_j, old_j in enumerate(surviving):
            for new_i, old_i in enumerate(surviving):
                if new_j <= new_i:
                    continue
                w = project(self.commutator(self.gen(old_j), self.gen(old_i)))
                if any(w):
                    comm[(new_j, new_i)] = PcGroup.letters(w)
        q = PcGroup([self.weights[i] for i in surviving], power, comm,
                    consistent=self.consistent)
        return q, project

    def abelian_invariants(self):
        """Type invariants of G/G' in logarithmic form (weakly decreasing)."""
        rows = self._abelianized_relations()
        return _linalg.abelian_invariants_from_relations(rows, self.n)

    def _abelianized_relations(self):
        rows = []
        for i in range(self.n):
            row = [0] * self.n
            row[i] = P
            for g, e in self.power[i]:
                row[g] -= e
            rows.append(row)
        for j in range(self.n):
            for i in range(j):
                w = self._comm[j][i]
                if w:
                    row = [0] * self.n
                    for g, e in w:
                        row[g] += e
                    rows.append(row)
        return rows

    def abelianization(self):
        """(projection, PcGroup of G/G', lift) for the commutator quotient."""
        def build():
            der = self.derived_subgroup()
            q, proj = self.quotient(der)
            surviving = [i for i in range(self.n) if i not in set(der.depths)]

            def lift(vec):
                out = [0] * self.n
                for pos, old in enumerate(surviving):
                    out[old] = vec[pos]
                return tuple(out)
            return q, proj, lift
        return self._cached("abelianization", build)

    def multiplication_table(self):
        """Dense table over all elements; only for oracle-sized groups."""
        import numpy as np
        elems = self.elements(limit=P ** 11)
        index = {e: k for k, e in enumerate(elems)}
        size = len(elems)
        table = np.empty((size, size), dtype=np.int32)
        for a, ea in enumerate(elems):
            for b, eb in enumerate(elems):
                table[a, b] = index[self.mult(ea, eb)]
        return elems, table

    def __repr__(self):
        return "PcGroup(order=3^%d, class=%s)" % (
            self.n, max(self.weights) if self.n else 0)


@dataclass(frozen=True)
class Element:
    """Thin wrapper pairing an exponent vector with its group."""
    group: PcGroup
    exponents: tuple

    def __mul__(self, other):
        return Element(self.group, self.group.mult(self.exponents,
                                                   other.exponents))

    def inverse(self):
        return Element(self.group, self.group.inverse(self.exponents))

    def __pow__(self, k):
        return Element(self.group, self.group.elt_pow(self.exponents, k))

    def commutator(self, other):
        return Element(self.group,
                       self.group.commutator(self.exponents, other.exponents))

    def order(self):
        return self.group.elt_order(self.exponents)

    @property
    def is_identity(self):
        return not any(self.exponents)


class Subgroup:
    """Subgroup described by an induced pc generating sequence.

    The basis has one normalized generator per occupied depth, so the order
    is 3^rank and membership is a sift.
    """

    def __init__(self, owner, generators, normal_closure=False):
        self.owner = owner
        self.generators = [tuple(g) for g in generators]
        self._basis = {}
        work = list(self.generators)
        G = owner
        while work:
            v = work.pop()
            v = self._sift(v)
            if not any(v):
                continue
            d = next(i for i, e in enumerate(v) if e)
            if v[d] == 2:
                v = G.mult(v, v)
            self._basis[d] = v
            new_work = [G.elt_pow(v, P)]
            for u in self._basis.values():
                new_work.append(G.commutator(u, v))
            if normal_closure:
                for k in range(G.n):
                    new_work.append(G.conj(v, G.gen(k)))
            for u in new_work:
                if any(self._sift(u)):
                    work.append(u)
        if normal_closure:
            # conjugation closure of every basis vector
            stable = False
            while not stable:
                stable = True
                for v in list(self._basis.values()):
                    for k in range(G.n):
                        c = G.conj(v, G.gen(k))
                        if any(self._sift(c)):
                            self._insert(c)
                            stable = False
        self.depths = sorted(self._basis)
        self.pcgs = [self._basis[d] for d in self.depths]

    def _insert(self, v):
        G = self.owner
        work = [v]
        while work:
            u = self._sift(work.pop())
            if not any(u):
                continue
            d = next(i for i, e in enumerate(u) if e)
            if u[d] == 2:
                u = G.mult(u, u)
            self._basis[d] = u
            work.append(G.elt_pow(u, P))
            for b in self._basis.values():
                work.append(G.commutator(b, u))

    def _sift(self, v):
        G = self.owner
        while any(v):
            d = next(i for i, e in enumerate(v) if e)
            b = self._basis.get(d)
            if b is None:
                return v
            t = v[d]
            v = G.mult(G.inverse(G.elt_pow(b, t)), v)
        return v

    @property
    def rank(self):
        return len(self.pcgs)

    @property
    def order(self):
        return P ** self.rank

    def contains(self, vec):
        return not any(self._sift(vec))

    def coordinates(self, vec):
        """Coordinates along the pcgs (ascending depth); vec must belong."""
        G = self.owner
        coords = []
        v = vec
        for b in self.pcgs:
            d = next(i for i, e in enumerate(b) if e)
            t = v[d]
            coords.append(t)
            if t:
                v = G.mult(G.inverse(G.elt_pow(b, t)), v)
        if any(v):
            raise ValueError("element not in subgroup")
        return coords

    def coset_representative(self, vec):
        """Canonical transversal representative: zeros on subgroup depths."""
        G = self.owner
        v = vec
        for d in self.depths:
            t = v[d]
            if t:
                v = G.mult(G.inverse(G.elt_pow(self._basis[d], t)), v)
        return v

    def is_normal(self):
        G = self.owner
        return all(self.contains(G.conj(v, G.gen(k)))
                   for v in self.pcgs for k in range(G.n))

    def relation_matrix(self):
        """Integer relation matrix of the subgroup on its pcgs."""
        G = self.owner
        k = self.rank
        rows = []
        for i, u in enumerate(self.pcgs):
            row = [0] * k
            row[i] = P
            for pos, c in enumerate(self.coordinates(G.elt_pow(u, P))):
                row[pos] -= c
            rows.append(row)
        for j in range(k):
            for i in range(j):
                w = G.commutator(self.pcgs[j], self.pcgs[i])
                row = list(self.coordinates(w))
                if any(row):
                    rows.append(row)
        return rows

    def abelian_invariants(self):
        """Type invariants of H/H' from the pcgs relation matrix."""
        if self.rank == 0:
            return []
        return _linalg.abelian_invariants_from_relations(
            self.relation_matrix(), self.rank)

    def abelian_projection(self):
        """AbelianProjection of H -> H/H' (coordinates via .coordinates)."""
        return _linalg.AbelianProjection(self.relation_matrix(), self.rank)

    def __repr__(self):
        return "Subgroup(order=3^%d of 3^%d)" % (self.rank, self.owner.n)


# ---------------------------------------------------------------------------
# fixture format: one generator list line, then `a_i^3 = <word>` and
# `[a_j,a_i] = <word>` lines; words are dot-separated powers, `1` is empty.

def parse_pc_fixture(text):
    lines = [ln.strip() for ln in text.splitlines()
             if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise MalformedPresentation("empty fixture")
    names = lines[0].split()
    index = {nm: i for i, nm in enumerate(names)}
    n = len(names)

    def parse_word(s):
        s = s.strip()
        if s == "1":
            return ()
        out = []
        for part in s.split("."):
            if "^" in part:
                nm, e = part.split("^")
                out.append((index[nm.strip()], int(e)))
            else:
                out.append((index[part.strip()], 1))
        return tuple(out)

    power = [()] * n
    comm = {}
    for ln in lines[1:]:
        lhs, rhs = ln.split("=", 1)
        lhs = lhs.strip()
        if lhs.startswith("["):
            a, b = lhs.strip("[]").split(",")
            j, i = index[a.strip()], index[b.strip()]
            w = parse_word(rhs)
            if w:
                comm[(j, i)] = w
        else:
            nm, e = lhs.split("^")
            if int(e) != P:
                raise MalformedPresentation("power relation must be a cube")
            power[index[nm.strip()]] = parse_word(rhs)

    # infer weights: start at 1 and relax upward until conditions hold
    weights = [1] * n
    changed = True
    while changed:
        changed = False
        for i in range(n):
            for g, _ in power[i]:
                if weights[g] < weights[i] + 1:
                    weights[g] = weights[i] + 1
                    changed = True
        for (j, i), w in comm.items():
            for g, _ in w:
                if weights[g] < weights[i] + weights[j]:
                    weights[g] = weights[i] + weights[j]
                    changed = True
    order = sorted(range(n), key=lambda i: (weights[i], i))
    if order != list(range(n)):
        raise MalformedPresentation("generators must be listed by weight")
    return PcGroup(weights, power, comm)


def load_pc_fixture(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_pc_fixture(fh.read())
