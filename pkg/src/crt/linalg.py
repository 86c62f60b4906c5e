"""Exact linear algebra over the Gaussian rationals.

Rows are stored sparsely (``{column: value}``) so the large but very sparse
tangency systems assembled by the nondegeneracy test stay cheap.
"""

from __future__ import annotations

from .gaussian import ONE, ZERO, GaussianRational


def _sparse(matrix) -> list:
    rows = []
    for row in matrix:
        if isinstance(row, dict):
            rows.append({j: GaussianRational.coerce(v) for j, v in row.items() if v})
        else:
            rows.append({j: GaussianRational.coerce(v) for j, v in enumerate(row) if v})
    return rows


def rref_sparse(rows: list, ncols: int):
    """Reduced row echelon form; returns ``(rows, pivot_columns)``.

    Pivot rows are scaled to a leading 1 and cleared above and below.
    """
    rows = [dict(r) for r in rows if r]
    pivots = []
    pivot_rows = []
    for col in range(ncols):
        best = None
        for k, r in enumerate(rows):
            if col in r:
                if best is None or len(r) < len(rows[best]):
                    best = k
        if best is None:
            continue
        prow = rows.pop(best)
        inv = prow[col].inverse()
        prow = {j: v * inv for j, v in prow.items()}
        for r in rows:
            f = r.get(col)
            if f is not None:
                for j, v in prow.items():
                    nv = r.get(j, ZERO) - f * v
                    if nv:
                        r[j] = nv
                    else:
                        r.pop(j, None)
        rows = [r for r in rows if r]
        pivots.append(col)
        pivot_rows.append(prow)
    # back substitution
    for k in range(len(pivot_rows) - 1, -1, -1):
        col = pivots[k]
        src = pivot_rows[k]
        for i in range(k):
            f = pivot_rows[i].get(col)
            if f is not None:
                r = pivot_rows[i]
                for j, v in src.items():
                    nv = r.get(j, ZERO) - f * v
                    if nv:
                        r[j] = nv
                    else:
                        r.pop(j, None)
    return pivot_rows, pivots


def rank(matrix) -> int:
    rows = _sparse(matrix)
    ncols = max((max(r) + 1 for r in rows if r), default=0)
    return len(rref_sparse(rows, ncols)[1])


def nullspace(matrix, ncols: int | None = None) -> list:
    """Basis of the right kernel, one vector per free column (in column order)."""
    rows = _sparse(matrix)
    if ncols is None:
        ncols = len(matrix[0]) if matrix and not isinstance(matrix[0], dict) else max(
            (max(r) + 1 for r in rows if r), default=0
        )
    prows, pivots = rref_sparse(rows, ncols)
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = [ZERO] * ncols
        vec[free] = ONE
        for prow, pc in zip(prows, pivots):
            v = prow.get(free)
            if v is not None:
                vec[pc] = -v
        basis.append(vec)
    return basis


def det(matrix) -> GaussianRational:
    n = len(matrix)
    if any(len(r) != n for r in matrix):
        raise ValueError("determinant of a non-square matrix")
    a = [[GaussianRational.coerce(v) for v in r] for r in matrix]
    result = ONE
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            return ZERO
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            result = -result
        p = a[col][col]
        result = result * p
        inv = p.inverse()
        for r in range(col + 1, n):
            f = a[r][col]
            if f:
                f = f * inv
                for c in range(col, n):
                    a[r][c] = a[r][c] - f * a[col][c]
    return result


def inverse(matrix) -> list:
    """Exact inverse; raises ZeroDivisionError for singular input."""
    n = len(matrix)
    aug = []
    for i, row in enumerate(matrix):
        if len(row) != n:
            raise ValueError("inverse of a non-square matrix")
        r = {j: GaussianRational.coerce(v) for j, v in enumerate(row) if v}
        r[n + i] = ONE
        aug.append(r)
    prows, pivots = rref_sparse(aug, 2 * n)
    if pivots[:n] != list(range(n)) or len(pivots) < n or pivots[n - 1] != n - 1:
        raise ZeroDivisionError("matrix is singular")
    return [[prows[i].get(n + j, ZERO) for j in range(n)] for i in range(n)]


def matmul(a, b) -> list:
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), ZERO) for j in range(len(b[0]))] for i in range(len(a))]


def identity(n: int) -> list:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
