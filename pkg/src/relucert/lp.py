"""Dense two-phase simplex solver for small linear programs.

Maximization convention throughout.  Bland's anti-cycling rule keeps the
pivot sequence deterministic and finite; problem sizes here are tens of
variables, so exact vertex solutions matter more than speed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LpProblem", "LpResult", "solve_lp", "OPTIMAL", "INFEASIBLE", "UNBOUNDED", "FAILED"]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
FAILED = "failed"

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)


@dataclass(frozen=True)
class LpProblem:
    """max objective @ x  subject to  rows[i] @ x (sense_i) rhs_i and box bounds.

    ``bounds[j] = (lo, hi)`` with ``None`` for an absent side; variables are
    free unless bounded explicitly.
    """

    objective: np.ndarray
    rows: np.ndarray
    senses: tuple[str, ...]
    rhs: np.ndarray
    bounds: tuple[tuple[float | None, float | None], ...] = field(default=())

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        n = c.shape[0]
        A = np.asarray(self.rows, dtype=float)
        if A.size == 0:
            A = A.reshape(0, n)
        if A.ndim != 2 or A.shape[1] != n:
            raise ValueError(f"rows must be (m, {n}), got {A.shape}")
        b = np.atleast_1d(np.asarray(self.rhs, dtype=float))
        if b.shape[0] != A.shape[0]:
            raise ValueError("rhs length must match number of rows")
        senses = tuple(self.senses)
        if len(senses) != A.shape[0]:
            raise ValueError("one sense per row required")
        for s in senses:
            if s not in _SENSES:
                raise ValueError(f"unknown sense {s!r}")
        bounds = tuple(self.bounds) if self.bounds else tuple((None, None) for _ in range(n))
        if len(bounds) != n:
            raise ValueError("one (lo, hi) pair per variable required")
        for arr, name in ((c, "objective"), (A, "rows"), (b, "rhs")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
        for lo, hi in bounds:
            if lo is not None and not np.isfinite(lo):
                raise ValueError("non-finite lower bound; use None for unbounded")
            if hi is not None and not np.isfinite(hi):
                raise ValueError("non-finite upper bound; use None for unbounded")
        c.setflags(write=False)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "rows", A)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "senses", senses)
        object.__setattr__(self, "bounds", bounds)

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class LpResult:
    status: str
    value: float | None = None
    point: np.ndarray | None = None

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL


def _to_standard_form(problem: LpProblem):
    """Rewrite with nonnegative variables only.

    Returns (c_std, offset, A_std, senses, b_std, recover) where
    ``recover(y)`` maps a standard-form point back to original variables.
    Finite lower bounds are shifted out, upper-only bounds are mirrored, and
    two-sided ranges contribute an extra <= row; free variables are split.
    """
    n = problem.num_vars
    c = problem.objective
    A = problem.rows
    b = problem.rhs.copy()
    senses = list(problem.senses)

    col_map = []  # per original var: ("shift", col, lo) | ("mirror", col, hi) | ("split", col_pos, col_neg)
    std_cols = []  # columns of A in standard space, built per variable
    c_std_parts = []
    offset = 0.0
    extra_rows = []  # (coeff_col_index, rhs) for range constraints y_j <= hi - lo
    ncols = 0
    for j, (lo, hi) in enumerate(problem.bounds):
        aj = A[:, j]
        if lo is not None:
            col_map.append(("shift", ncols, lo))
            std_cols.append(aj)
            c_std_parts.append(c[j])
            b -= aj * lo
            offset += c[j] * lo
            if hi is not None:
                extra_rows.append((ncols, hi - lo))
            ncols += 1
        elif hi is not None:
            # x_j = hi - y_j with y_j >= 0
            col_map.append(("mirror", ncols, hi))
            std_cols.append(-aj)
            c_std_parts.append(-c[j])
            b -= aj * hi
            offset += c[j] * hi
            ncols += 1
        else:
            col_map.append(("split", ncols, ncols + 1))
            std_cols.append(aj)
            std_cols.append(-aj)
            c_std_parts.append(c[j])
            c_std_parts.append(-c[j])
            ncols += 2

    A_std = np.column_stack(std_cols) if std_cols else np.zeros((A.shape[0], 0))
    for col, rng in extra_rows:
        row = np.zeros(ncols)
        row[col] = 1.0
        A_std = np.vstack([A_std, row])
        b = np.append(b, rng)
        senses.append(LE)

    c_std = np.asarray(c_std_parts)

    def recover(y: np.ndarray) -> np.ndarray:
        x = np.empty(n)
        for j, entry in enumerate(col_map):
            kind = entry[0]
            if kind == "shift":
                x[j] = entry[2] + y[entry[1]]
            elif kind == "mirror":
                x[j] = entry[2] - y[entry[1]]
            else:
                x[j] = y[entry[1]] - y[entry[2]]
        return x

    return c_std, offset, A_std, senses, b, recover


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    piv = T[row]
    for i in range(T.shape[0]):
        if i != row and abs(T[i, col]) > 0.0:
            T[i] -= T[i, col] * piv
    basis[row] = col


def _simplex_phase(T: np.ndarray, basis: np.ndarray, c: np.ndarray, max_iters: int):
    """Run Bland-rule simplex on tableau ``T = [B^-1 A | B^-1 b]``.

    Maximizes ``c @ y``.  Returns "optimal", "unbounded", or "failed".
    """
    m = T.shape[0]
    ncols = T.shape[1] - 1
    for _ in range(max_iters):
        reduced = c - c[basis] @ T[:, :ncols] if m else c.copy()
        enter = -1
        for j in range(ncols):
            if reduced[j] > PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        # Bland leaving rule: min ratio, ties by smallest basis variable index
        leave = -1
        best = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < best - PIVOT_TOL or (
                    abs(ratio - best) <= PIVOT_TOL and (leave < 0 or basis[i] < basis[leave])
                ):
                    best = ratio
                    leave = i
        if leave < 0:
            return UNBOUNDED
        _pivot(T, basis, leave, enter)
    return FAILED


def solve_lp(problem: LpProblem) -> LpResult:
    """Solve ``problem`` exactly at desk scale.

    Status is one of optimal / infeasible / unbounded, with "failed"
    reserved for numerical breakdown (iteration cap or an optimal point
    that does not verify feasible).  Deterministic for fixed input.
    """
    c_std, offset, A, senses, b, recover = _to_standard_form(problem)
    m, n = A.shape

    # Orient every row to nonnegative rhs, then add slack/surplus columns.
    A = A.copy()
    b = b.copy()
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
            if senses[i] == LE:
                senses[i] = GE
            elif senses[i] == GE:
                senses[i] = LE

    slack_cols = []
    art_rows = []
    for i in range(m):
        col = np.zeros(m)
        if senses[i] == LE:
            col[i] = 1.0
            slack_cols.append(col)
        elif senses[i] == GE:
            col[i] = -1.0
            slack_cols.append(col)
            art_rows.append(i)
        else:
            art_rows.append(i)
    n_slack = len(slack_cols)
    full = np.hstack([A, np.column_stack(slack_cols)]) if n_slack else A
    ncols = n + n_slack

    basis = np.full(m, -1, dtype=int)
    slack_idx = 0
    for i in range(m):
        if senses[i] == LE:
            basis[i] = n + slack_idx
        if senses[i] in (LE, GE):
            slack_idx += 1

    n_art = len(art_rows)
    if n_art:
        art = np.zeros((m, n_art))
        for k, i in enumerate(art_rows):
            art[i, k] = 1.0
            basis[i] = ncols + k
        full = np.hstack([full, art])

    T = np.hstack([full, b[:, None]])
    max_iters = 2000 + 200 * (m + ncols)
    scale = max(1.0, float(np.max(np.abs(b))) if m else 1.0)

    if n_art:
        c1 = np.zeros(T.shape[1] - 1)
        c1[ncols:] = -1.0  # maximize -sum(artificials)
        status = _simplex_phase(T, basis, c1, max_iters)
        if status != OPTIMAL:
            return LpResult(FAILED)
        phase1 = c1[basis] @ T[:, -1]
        if phase1 < -FEAS_TOL * scale:
            return LpResult(INFEASIBLE)
        # Drive leftover artificials out of the basis (degenerate rows).
        for i in range(m):
            if basis[i] >= ncols:
                pivot_col = -1
                for j in range(ncols):
                    if abs(T[i, j]) > PIVOT_TOL:
                        pivot_col = j
                        break
                if pivot_col >= 0:
                    _pivot(T, basis, i, pivot_col)
        keep = [i for i in range(m) if basis[i] < ncols]
        if len(keep) < m:
            T = T[keep]
            basis = basis[keep]
            m = len(keep)
        T = np.hstack([T[:, :ncols], T[:, -1:]])

    c2 = np.zeros(ncols)
    c2[: c_std.shape[0]] = c_std
    status = _simplex_phase(T, basis, c2, max_iters)
    if status != OPTIMAL:
        return LpResult(status)

    y = np.zeros(ncols)
    y[basis] = T[:, -1]
    point = recover(y[: c_std.shape[0]])
    value = float(problem.objective @ point)

    if not _verify(problem, point):
        return LpResult(FAILED)
    return LpResult(OPTIMAL, value=value, point=point)


def _verify(problem: LpProblem, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
    scale = max(1.0, float(np.max(np.abs(problem.rhs))) if problem.rhs.size else 1.0)
    lhs = problem.rows @ x if problem.rows.size else np.zeros(0)
    for i, s in enumerate(problem.senses):
        r = lhs[i] - problem.rhs[i]
        if s == LE and r > tol * scale:
            return False
        if s == GE and r < -tol * scale:
            return False
        if s == EQ and abs(r) > tol * scale:
            return False
    for j, (lo, hi) in enumerate(problem.bounds):
        if lo is not None and x[j] < lo - tol * scale:
            return False
        if hi is not None and x[j] > hi + tol * scale:
            return False
    return True
