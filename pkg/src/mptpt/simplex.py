"""Two-phase primal revised simplex returning basic (vertex) solutions.

The basis is kept as a sparse LU factorisation of the basis matrix plus a
product-form eta file, refactorised every ``refactor_every`` pivots. Pricing
is Dantzig's rule; after ``bland_after`` consecutive degenerate pivots it
switches to Bland's rule until a pivot makes progress.

Every optimal result carries a basis certificate: one column label per row
of the model, where labels are ``("x", j)`` for structural columns, ``("s", i)``
for the slack of ``<=`` row ``i`` and ``("a", i)`` for an artificial left in
the basis on a redundant row.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .lp import EQ, LE, LpModel

log = logging.getLogger(__name__)

OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"

PIVOT_TOL = 1e-8
FEAS_TOL = 1e-7
ZERO_TOL = 1e-9
OPT_TOL = 1e-9


class SimplexError(RuntimeError):
    """Numerical breakdown the solver could not recover from."""


@dataclass
class BasicSolution:
    status: str
    x: np.ndarray
    objective: float = float("nan")
    basis: tuple = ()
    n_rows: int = 0
    iterations: int = 0
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    def positive_support(self, tol: float = ZERO_TOL) -> int:
        return int(np.count_nonzero(self.x > tol))


Solver = Callable[[LpModel], BasicSolution]


class _Factor:
    """B^-1 as LU(B0) followed by eta transformations."""

    def __init__(self, B0: sp.csc_matrix):
        self.lu = splu(B0, permc_spec="COLAMD") if B0.shape[0] else None
        self.etas: list[tuple[int, float, np.ndarray, np.ndarray]] = []

    def ftran(self, z: np.ndarray) -> np.ndarray:
        if self.lu is not None:
            z = self.lu.solve(z)
        for r, piv, idx, vals in self.etas:
            zr = z[r] / piv
            if zr != 0.0:
                z[idx] -= zr * vals
            z[r] = zr
        return z

    def btran(self, w: np.ndarray) -> np.ndarray:
        w = w.copy()
        for r, piv, idx, vals in reversed(self.etas):
            w[r] = (w[r] - vals @ w[idx]) / piv
        if self.lu is not None:
            w = self.lu.solve(w, trans="T")
        return w

    def push(self, r: int, alpha: np.ndarray) -> None:
        idx = np.flatnonzero(np.abs(alpha) > 1e-14)
        idx = idx[idx != r]
        self.etas.append((r, float(alpha[r]), idx, alpha[idx].copy()))


@dataclass
class _Standard:
    """min c x  s.t.  A x = b, x >= 0, b >= 0, built from an LpModel."""

    A: sp.csc_matrix
    b: np.ndarray
    c: np.ndarray
    labels: list
    n_struct: int
    struct_of: np.ndarray  # model var index per structural column
    is_art: np.ndarray
    basis: list[int]
    extra_basis: list  # certificate entries for presolved rows
    infeasible: bool = False


def _standardise(model: LpModel) -> _Standard:
    n = model.n_vars
    fixed = np.zeros(n, dtype=bool)
    dropped = set()
    extra = []
    for i, r in enumerate(model.rows):
        nz = [j for j, v in zip(r.cols, r.vals) if v != 0.0]
        if r.sense == EQ and len(nz) == 1 and r.rhs == 0.0 and not fixed[nz[0]]:
            fixed[nz[0]] = True
            dropped.add(i)
            extra.append(("x", nz[0]))
    keep_var = np.flatnonzero(~fixed)
    new_col = -np.ones(n, dtype=np.int64)
    new_col[keep_var] = np.arange(len(keep_var))

    ri, ci, vv, b, row_ids, senses = [], [], [], [], [], []
    infeasible = False
    for i, r in enumerate(model.rows):
        if i in dropped:
            continue
        entries = [(new_col[j], v) for j, v in zip(r.cols, r.vals) if v != 0.0 and new_col[j] >= 0]
        if not entries:
            if r.sense == EQ:
                infeasible |= abs(r.rhs) > FEAS_TOL
                extra.append(("a", i))
            else:
                infeasible |= r.rhs < -FEAS_TOL
                extra.append(("s", i))
            continue
        k = len(b)
        sign = -1.0 if r.rhs < 0 else 1.0
        for j, v in entries:
            ri.append(k)
            ci.append(j)
            vv.append(sign * v)
        b.append(sign * r.rhs)
        row_ids.append(i)
        senses.append((r.sense, sign))
    m, ns = len(b), len(keep_var)
    labels = [("x", int(j)) for j in keep_var]
    basis = [-1] * m
    col = ns
    for k, (sense, sign) in enumerate(senses):
        if sense == LE:
            ri.append(k)
            ci.append(col)
            vv.append(sign)
            labels.append(("s", row_ids[k]))
            if sign > 0:
                basis[k] = col
            col += 1
    n_nonart = col
    for k in range(m):
        if basis[k] < 0:
            ri.append(k)
            ci.append(col)
            vv.append(1.0)
            labels.append(("a", row_ids[k]))
            basis[k] = col
            col += 1
    A = sp.csc_matrix((vv, (ri, ci)), shape=(m, col))
    A.sum_duplicates()
    c = np.zeros(col)
    c[:ns] = np.asarray(model.cost, dtype=float)[keep_var]
    is_art = np.zeros(col, dtype=bool)
    is_art[n_nonart:] = True
    return _Standard(A, np.asarray(b, float), c, labels, ns, keep_var, is_art, basis, extra, infeasible)


class _Simplex:
    def __init__(self, std: _Standard, refactor_every: int, bland_after: int, max_iter: Optional[int]):
        self.s = std
        self.A = std.A
        self.AT = std.A.T.tocsr()
        self.m, self.N = std.A.shape
        self.basis = np.array(std.basis, dtype=np.int64)
        self.in_basis = np.zeros(self.N, dtype=bool)
        self.in_basis[self.basis] = True
        self.refactor_every = refactor_every
        self.bland_after = bland_after
        self.max_iter = max_iter or 50 * (self.m + self.N) + 1000
        self.iterations = 0
        self.degenerate = 0
        self.bland_pivots = 0
        self.refactor()

    def column(self, j: int) -> np.ndarray:
        A = self.A
        z = np.zeros(self.m)
        lo, hi = A.indptr[j], A.indptr[j + 1]
        z[A.indices[lo:hi]] = A.data[lo:hi]
        return z

    def refactor(self) -> None:
        B = self.A[:, self.basis].tocsc()
        try:
            self.F = _Factor(B)
        except RuntimeError as exc:
            raise SimplexError(f"singular basis at iteration {self.iterations}") from exc
        self.xB = self.F.ftran(self.s.b.copy()) if self.m else np.zeros(0)
        worst = self.xB.min(initial=0.0)
        if worst < -FEAS_TOL * max(1.0, np.abs(self.s.b).max(initial=0.0)):
            raise SimplexError(f"basic solution drifted infeasible ({worst:.3g})")
        self.xB[self.xB < 0.0] = 0.0

    def run(self, cost: np.ndarray, allowed: np.ndarray) -> str:
        bland = False
        since_refactor = 0
        art_rows = self.s.is_art[self.basis]
        while True:
            if self.iterations >= self.max_iter:
                raise SimplexError(f"iteration limit {self.max_iter} reached")
            y = self.F.btran(cost[self.basis])
            d = cost - self.AT @ y
            d[self.in_basis | ~allowed] = 0.0
            if bland:
                cand = np.flatnonzero(d < -OPT_TOL)
                if cand.size == 0:
                    return OPTIMAL
                j = int(cand[0])
            else:
                j = int(np.argmin(d))
                if d[j] >= -OPT_TOL:
                    return OPTIMAL
            alpha = self.F.ftran(self.column(j))
            art_rows = self.s.is_art[self.basis]
            pos = alpha > PIVOT_TOL
            # an artificial stuck on a redundant row must stay at zero
            guard = art_rows & (np.abs(alpha) > PIVOT_TOL) & (self.xB <= ZERO_TOL)
            rows = np.flatnonzero(pos | guard)
            if rows.size == 0:
                return UNBOUNDED
            ratios = np.where(guard[rows], 0.0, self.xB[rows] / np.abs(alpha[rows]))
            theta = ratios.min()
            ties = rows[ratios <= theta + 1e-12]
            if bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(alpha[ties]))])
            self.pivot(r, j, alpha, theta)
            if theta <= 1e-12:
                self.degenerate += 1
                if self.degenerate > self.bland_after:
                    bland = True
            else:
                self.degenerate = 0
                bland = False
            self.bland_pivots += bland
            since_refactor += 1
            if since_refactor >= self.refactor_every:
                self.refactor()
                since_refactor = 0

    def pivot(self, r: int, j: int, alpha: np.ndarray, theta: float) -> None:
        self.xB -= theta * alpha
        self.xB[r] = theta
        self.xB[(self.xB < 0.0) & (self.xB > -ZERO_TOL)] = 0.0
        self.in_basis[self.basis[r]] = False
        self.in_basis[j] = True
        self.basis[r] = j
        self.F.push(r, alpha)
        self.iterations += 1

    def drive_out_artificials(self) -> None:
        nonart = ~self.s.is_art
        for r in range(self.m):
            if not self.s.is_art[self.basis[r]]:
                continue
            e = np.zeros(self.m)
            e[r] = 1.0
            row = self.AT @ self.F.btran(e)
            row[self.in_basis | ~nonart] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) <= 1e-7:
                continue  # redundant row
            self.xB[r] = 0.0
            self.pivot(r, j, self.F.ftran(self.column(j)), 0.0)
        self.refactor()


def simplex_solve(
    model: LpModel,
    solver: Optional[Solver] = None,
    refactor_every: int = 100,
    bland_after: int = 50,
    max_iter: Optional[int] = None,
    feasibility_only: bool = False,
) -> BasicSolution:
    """Solve ``model`` to a basic optimal solution.

    ``solver`` plugs in an external backend; its answer is accepted only with
    a basis certificate that :func:`check_basis` confirms.
    ``feasibility_only`` stops after phase 1 (the point is then basic and
    feasible but not optimal).
    """
    if solver is not None:
        sol = solver(model)
        if sol.optimal:
            problems = check_basis(model, sol)
            if problems:
                raise SimplexError("external solution rejected: " + "; ".join(problems))
        return sol

    std = _standardise(model)
    n = model.n_vars
    if std.infeasible:
        return BasicSolution(INFEASIBLE, np.zeros(n), n_rows=model.n_rows)
    if std.A.shape[0] == 0:
        # presolve consumed every row: x = 0 unless some free direction pays
        if (std.c < -OPT_TOL).any():
            return BasicSolution(UNBOUNDED, np.zeros(n), n_rows=model.n_rows)
        basis = tuple(std.extra_basis)
        return BasicSolution(OPTIMAL, np.zeros(n), 0.0, basis, model.n_rows, 0, {"bland_pivots": 0})
    spx = _Simplex(std, refactor_every, bland_after, max_iter)
    if std.is_art.any():
        phase1 = std.is_art.astype(float)
        spx.run(phase1, np.ones(spx.N, dtype=bool))
        infeas = float(phase1[spx.basis] @ spx.xB)
        if infeas > FEAS_TOL * max(1.0, np.abs(std.b).max(initial=0.0)):
            return BasicSolution(INFEASIBLE, np.zeros(n), n_rows=model.n_rows, iterations=spx.iterations)
        spx.drive_out_artificials()
    status = OPTIMAL
    if not feasibility_only:
        status = spx.run(std.c, ~std.is_art)
        if status == UNBOUNDED:
            return BasicSolution(UNBOUNDED, np.zeros(n), n_rows=model.n_rows, iterations=spx.iterations)
    x = np.zeros(n)
    for r, col in enumerate(spx.basis):
        if col < std.n_struct:
            x[std.struct_of[col]] = spx.xB[r]
    x[x < ZERO_TOL] = 0.0
    basis = tuple(std.labels[col] for col in spx.basis) + tuple(std.extra_basis)
    sol = BasicSolution(
        OPTIMAL,
        x,
        float(np.dot(model.cost, x)),
        basis,
        model.n_rows,
        spx.iterations,
        {"bland_pivots": spx.bland_pivots, "phase1_only": feasibility_only},
    )
    log.debug("%s: %d rows, %d vars, %d pivots", model.name, model.n_rows, n, spx.iterations)
    return sol


def check_basis(model: LpModel, sol: BasicSolution, tol: float = FEAS_TOL) -> list[str]:
    """Independent check that ``sol.basis`` certifies ``sol.x`` as a vertex."""
    problems = []
    m = model.n_rows
    if len(sol.basis) != m or len(set(sol.basis)) != m:
        return [f"basis has {len(sol.basis)} distinct labels for {m} rows"]
    A = model.matrix().tocsc()
    cols, x_b = [], []
    basic_x = set()
    s = np.maximum(model.rhs() - A @ sol.x, 0.0)
    for kind, i in sol.basis:
        if kind == "x":
            cols.append(A[:, i])
            x_b.append(sol.x[i])
            basic_x.add(i)
        else:
            if kind == "s" and model.rows[i].sense != LE:
                problems.append(f"slack label on equality row {i}")
            e = sp.csc_matrix(([1.0], ([i], [0])), shape=(m, 1))
            cols.append(e)
            x_b.append(s[i] if kind == "s" else 0.0)
    nonbasic = np.ones(model.n_vars, dtype=bool)
    nonbasic[list(basic_x)] = False
    if np.any(np.abs(sol.x[nonbasic]) > tol):
        problems.append("nonbasic structural variable away from zero")
    if m:
        B = sp.hstack(cols).tocsc()
        try:
            lu = splu(B)
        except RuntimeError:
            return problems + ["basis matrix is singular"]
        xb = lu.solve(model.rhs())
        scale = max(1.0, np.abs(model.rhs()).max())
        if np.abs(xb - np.asarray(x_b)).max() > 1e-6 * scale:
            problems.append("basis does not reproduce the solution")
    res = model.residuals(sol.x)
    if res.size and res.max() > tol * max(1.0, np.abs(model.rhs()).max()):
        problems.append(f"constraint residual {res.max():.3g}")
    return problems
