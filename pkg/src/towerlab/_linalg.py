"""Small exact linear algebra helpers.

Two flavours live here: row reduction over F_3 (used for multiplicator
arithmetic, subspace orbits and consistency elimination) and a 3-adic
diagonalization of integer relation matrices (used for abelian type
invariants, where all torsion is a power of 3).
"""

from __future__ import annotations

from itertools import combinations, product

P = 3


# ---------------------------------------------------------------------------
# F_3 vectors and matrices (tuples/lists of small ints)

def rref(rows, ncols):
    """Row-reduce over F_3. Returns (reduced rows, pivot column list)."""
    mat = [list(r) for r in rows if any(x % P for x in r)]
    for m in mat:
        for j in range(ncols):
            m[j] %= P
    out = []
    pivots = []
    col = 0
    r = 0
    while col < ncols:
        piv = None
        for i in range(r, len(mat)):
            if mat[i][col]:
                piv = i
                break
        if piv is None:
            col += 1
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = 1 if mat[r][col] == 1 else 2  # inverse mod 3
        if inv != 1:
            mat[r] = [(x * inv) % P for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col]:
                c = mat[i][col]
                mat[i] = [(a - c * b) % P for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        col += 1
    out = mat[:r]
    return out, pivots


def reduce_vector(vec, rows, pivots):
    """Reduce vec modulo the row space given in rref form."""
    v = [x % P for x in vec]
    for row, p in zip(rows, pivots):
        if v[p]:
            c = v[p]
            v = [(a - c * b) % P for a, b in zip(v, row)]
    return v


def in_span(vec, rows, pivots):
    return not any(reduce_vector(vec, rows, pivots))


def nullspace(rows, ncols):
    """Basis of the right nullspace of the matrix over F_3."""
    red, pivots = rref(rows, ncols)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        v = [0] * ncols
        v[f] = 1
        for row, p in zip(red, pivots):
            v[p] = (-row[f]) % P
        basis.append(tuple(v))
    return basis


def subspace_canon(vectors, ncols):
    """Canonical (hashable) form of a subspace: tuple of rref basis rows."""
    red, _ = rref(vectors, ncols)
    return tuple(tuple(r) for r in red)


def mat_on_subspace(canon, matrix):
    """Image of a canonical subspace under v -> v @ matrix (row convention)."""
    imgs = []
    n = len(matrix[0]) if matrix else 0
    for v in canon:
        imgs.append([sum(v[i] * matrix[i][j] for i in range(len(v))) % P
                     for j in range(n)])
    return subspace_canon(imgs, n)


def _rref_patterns(nrows, ncols):
    """All rref matrices with nrows pivots over F_3, ncols columns."""
    for pivots in combinations(range(ncols), nrows):
        # free entries: row i may have arbitrary entries in columns j > pivots[i]
        # that are not pivot columns
        slots = []
        for i in range(nrows):
            cols = [j for j in range(pivots[i] + 1, ncols) if j not in pivots]
            slots.append(cols)
        flat = [(i, j) for i in range(nrows) for j in slots[i]]
        for vals in product(range(P), repeat=len(flat)):
            mat = [[0] * ncols for _ in range(nrows)]
            for i in range(nrows):
                mat[i][pivots[i]] = 1
            for (i, j), v in zip(flat, vals):
                mat[i][j] = v
            yield tuple(tuple(r) for r in mat)


def subspaces_of_dim(dim, ncols):
    """All dim-dimensional subspaces of F_3^ncols, canonical form, lex order."""
    return sorted(_rref_patterns(dim, ncols))


def subspaces_of_codim(codim, ncols):
    """All subspaces of codimension codim, via their dual (annihilator)."""
    out = []
    for dual in _rref_patterns(codim, ncols):
        out.append(subspace_canon(nullspace(dual, ncols), ncols))
    return sorted(out)


def span_sum_is_full(rows_a, rows_b, ncols):
    _, piv = rref(list(rows_a) + list(rows_b), ncols)
    return len(piv) == ncols


# ---------------------------------------------------------------------------
# 3-adic diagonalization of integer matrices

def _v3(x):
    x = abs(x)
    v = 0
    while x % 3 == 0:
        x //= 3
        v += 1
    return v


def diagonalize_3adic(rows, ncols):
    """Diagonalize an integer matrix over Z localized at 3.

    Row/column operations are unimodular at 3 (rows and columns may be scaled
    by units of Z_(3)), which preserves the 3-primary part of the cokernel.
    Returns (exps, col_transform, pivot_count):
      exps[i] is the 3-valuation of the i-th diagonal pivot;
      col_transform C satisfies: the class of a row vector v in
      Z^ncols / rowspan is read off from (v @ C): coordinate i taken
      mod 3^exps[i] for i < pivot_count; the remaining coordinates must
      vanish mod 3^inf (free part) and are reported for the caller to check.
    """
    A = [list(r) + [0] * (ncols - len(r)) for r in rows]
    if not A:
        A = [[0] * ncols]
    m = len(A)
    C = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]
    exps = []
    r = 0
    while r < min(m, ncols):
        best = None
        for i in range(r, m):
            for j in range(r, ncols):
                if A[i][j]:
                    v = _v3(A[i][j])
                    if best is None or v < best[0]:
                        best = (v, i, j)
            if best and best[0] == 0:
                break
        if best is None:
            break
        k, bi, bj = best
        A[r], A[bi] = A[bi], A[r]
        if bj != r:
            for row in A:
                row[r], row[bj] = row[bj], row[r]
            for row in C:
                row[r], row[bj] = row[bj], row[r]
        piv = A[r][r]
        u = piv // (3 ** k)
        for i in range(r + 1, m):
            a = A[i][r]
            if a:
                q = a // (3 ** k)
                A[i] = [u * x - q * y for x, y in zip(A[i], A[r])]
        for j in range(r + 1, ncols):
            a = A[r][j]
            if a:
                q = a // (3 ** k)
                for row in A:
                    row[j] = u * row[j] - q * row[r]
                for row in C:
                    row[j] = u * row[j] - q * row[r]
        exps.append(k)
        r += 1
    return exps, C, r


def abelian_invariants_from_relations(rows, ncols):
    """Type invariants (weakly decreasing 3-exponents) of Z^n / rowspan.

    The quotient must be a finite 3-group; a free coordinate raises
    ValueError.
    """
    exps, _, rank = diagonalize_3adic(rows, ncols)
    if rank < ncols:
        raise ValueError("relation matrix does not present a finite 3-group")
    return sorted((e for e in exps if e > 0), reverse=True)


class AbelianProjection:
    """Projection Z^n / rowspan -> prod Z/3^{k_i} with coordinate access."""

    def __init__(self, rows, ncols):
        exps, C, rank = diagonalize_3adic(rows, ncols)
        if rank < ncols:
            raise ValueError("relation matrix does not present a finite 3-group")
        self.ncols = ncols
        self._C = C
        self.exps = exps  # in pivot order, zeros included
        self.moduli = [3 ** e for e in exps]

    def project(self, vec):
        out = []
        for j in range(len(self.exps)):
            s = sum(vec[i] * self._C[i][j] for i in range(self.ncols))
            m = self.moduli[j]
            out.append(s % m if m > 1 else 0)
        return tuple(c for c, m in zip(out, self.moduli) if m > 1)

    @property
    def invariants(self):
        return sorted((e for e in self.exps if e > 0), reverse=True)

    @property
    def nontrivial_moduli(self):
        return [m for m in self.moduli if m > 1]
