"""Hermitian linear algebra and a small semidefinite-programming front end.

Problems are stated over complex Hermitian PSD matrix variables and real
scalar variables. Every Hermitian ``n x n`` variable is parametrized by its
``n**2`` real degrees of freedom, so the real symmetric embedding

    [[Re X, -Im X],
     [Im X,  Re X]]

carries its block structure by construction. The compiled cone program is
handed to cvxopt's primal-dual interior-point solver.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from cvxopt import matrix as cvx_matrix
from cvxopt import solvers as cvx_solvers

from .array_model import DomainError

log = logging.getLogger(__name__)

RANK_TOL = 1e-9
NOT_PSD_TOL = 1e-6


# ---------------------------------------------------------------------------
# Hermitian helpers
# ---------------------------------------------------------------------------

def is_hermitian(H, tol: float = 1e-12) -> bool:
    H = np.asarray(H)
    return H.ndim == 2 and H.shape[0] == H.shape[1] and np.allclose(H, H.conj().T, atol=tol, rtol=0)


def hermitian_part(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    return 0.5 * (H + H.conj().T)


def real_embedding(H) -> np.ndarray:
    H = np.asarray(H, dtype=complex)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def psd_factor(H, rank_cap: Optional[int] = None, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Return ``F`` with ``F F^H ~= H`` from the eigendecomposition of ``H``.

    Columns are ordered by decreasing eigenvalue. Eigenvalues at or below
    ``rank_tol * trace(H)`` are dropped; ``rank_cap`` keeps only the largest.
    """
    H = hermitian_part(H)
    lam, U = np.linalg.eigh(H)
    lam, U = lam[::-1], U[:, ::-1]
    scale = max(float(np.trace(H).real), 0.0)
    if lam.size and lam[-1] < -NOT_PSD_TOL * max(scale, 1e-300):
        raise DomainError(f"matrix is not PSD (min eigenvalue {lam[-1]:.3e}, trace {scale:.3e})")
    keep = lam > rank_tol * scale
    if scale == 0.0:
        keep[:] = False
    lam, U = lam[keep], U[:, keep]
    if rank_cap is not None:
        if rank_cap < 1:
            raise DomainError("rank_cap must be >= 1")
        lam, U = lam[:rank_cap], U[:, :rank_cap]
    return U * np.sqrt(lam)[None, :]


def rank1_approx(H) -> np.ndarray:
    """Dominant eigenpair as ``sqrt(lam_1) u_1``, first nonzero entry real positive."""
    F = psd_factor(H, rank_cap=1)
    if F.shape[1] == 0:
        return np.zeros(np.asarray(H).shape[0], dtype=complex)
    v = F[:, 0]
    nz = np.flatnonzero(np.abs(v) > 1e-12 * np.max(np.abs(v)))
    return v * np.exp(-1j * np.angle(v[nz[0]]))


def eigenspectrum(H) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in decreasing order."""
    return np.linalg.eigvalsh(hermitian_part(H))[::-1]


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------

@dataclass
class Affine:
    """Real affine functional ``sum_v Re tr(C_v X_v) + sum_s c_s s + const``.

    ``terms`` maps a matrix variable name to its (Hermitian) coefficient
    matrix, or a scalar variable name to a float.
    """

    terms: dict = field(default_factory=dict)
    const: float = 0.0
    label: str = ""


@dataclass
class MatrixAffine:
    """Hermitian matrix expression ``sum_v c_v X_v + const`` with real ``c_v``."""

    terms: dict = field(default_factory=dict)
    const: Optional[np.ndarray] = None
    label: str = ""


@dataclass
class ConicProblem:
    """Maximize ``objective`` over PSD matrix and free scalar variables.

    ``ineq`` entries are constrained ``>= 0``, ``eq`` entries ``== 0``;
    ``psd`` expressions must be PSD; each ``soc`` entry ``[u0, u1, ...]``
    requires ``||(u1, ...)||_2 <= u0``. With no objective the problem is a
    pure feasibility check.
    """

    psd_vars: list = field(default_factory=list)     # [(name, dim)]
    scalar_vars: list = field(default_factory=list)  # [name]
    objective: Optional[Affine] = None
    eq: list = field(default_factory=list)
    ineq: list = field(default_factory=list)
    psd: list = field(default_factory=list)
    soc: list = field(default_factory=list)

    def validate(self):
        names = [n for n, _ in self.psd_vars] + list(self.scalar_vars)
        if len(set(names)) != len(names):
            raise DomainError("duplicate variable names")
        dims = dict(self.psd_vars)
        scalars = set(self.scalar_vars)
        exprs = list(self.eq) + list(self.ineq) + [e for cone in self.soc for e in cone]
        if self.objective is not None:
            exprs.append(self.objective)
        for e in exprs:
            for name, c in e.terms.items():
                if name in dims:
                    if np.shape(c) != (dims[name], dims[name]):
                        raise DomainError(f"coefficient for {name!r} has wrong shape {np.shape(c)}")
                elif name not in scalars:
                    raise DomainError(f"undeclared variable {name!r}")
        for m in self.psd:
            sizes = {dims[n] for n in m.terms if n in dims}
            if any(n not in dims for n in m.terms):
                raise DomainError("matrix expressions may only reference matrix variables")
            if m.const is not None:
                sizes.add(np.shape(m.const)[0])
            if len(sizes) != 1:
                raise DomainError("inconsistent dimensions in matrix expression")


class Status(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class ConicOutcome:
    status: Status
    solution: Optional[dict] = None
    max_violation: float = float("inf")
    iterations: int = 0
    objective: Optional[float] = None
    solver_status: str = ""

    @property
    def feasible(self) -> bool:
        return self.status is Status.FEASIBLE


@dataclass(frozen=True)
class Tolerances:
    feas_tol: float = 1e-7
    opt_tol: float = 1e-7
    max_iters: int = 200


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _hermitian_basis(n: int):
    """Index bookkeeping for the ``n**2`` real parameters of a Hermitian matrix.

    Order: diagonal, then real parts of the strict upper triangle, then
    imaginary parts. Returns (iu, ju, embedded basis of shape (n**2, 4n**2)).
    """
    iu, ju = np.triu_indices(n, k=1)
    basis = np.zeros((n * n, n, n), dtype=complex)
    d = np.arange(n)
    basis[d, d, d] = 1.0
    p = n + np.arange(iu.size)
    basis[p, iu, ju] = 1.0
    basis[p, ju, iu] = 1.0
    q = n + iu.size + np.arange(iu.size)
    basis[q, iu, ju] = 1j
    basis[q, ju, iu] = -1j
    emb = np.stack([real_embedding(b) for b in basis]).reshape(n * n, -1, order="F")
    return iu, ju, emb


def _functional_coeffs(C, n: int) -> np.ndarray:
    """Coefficients ``Re tr(C E_p)`` for every basis element ``E_p``."""
    C = np.asarray(C, dtype=complex)
    iu, ju, _ = _hermitian_basis(n)
    diag = np.real(np.diag(C))
    re = np.real(C[ju, iu] + C[iu, ju])
    im = np.real(1j * C[ju, iu] - 1j * C[iu, ju])
    return np.concatenate([diag, re, im])


def _unpack(params: np.ndarray, n: int) -> np.ndarray:
    iu, ju, _ = _hermitian_basis(n)
    X = np.zeros((n, n), dtype=complex)
    X[np.arange(n), np.arange(n)] = params[:n]
    k = iu.size
    vals = params[n:n + k] + 1j * params[n + k:n + 2 * k]
    X[iu, ju] = vals
    X[ju, iu] = vals.conj()
    return X


class _Layout:
    def __init__(self, problem: ConicProblem):
        self.offsets = {}
        self.dims = dict(problem.psd_vars)
        pos = 0
        for name, dim in problem.psd_vars:
            self.offsets[name] = pos
            pos += dim * dim
        for name in problem.scalar_vars:
            self.offsets[name] = pos
            pos += 1
        self.size = pos

    def row(self, expr: Affine) -> np.ndarray:
        r = np.zeros(self.size)
        for name, c in expr.terms.items():
            o = self.offsets[name]
            if name in self.dims:
                n = self.dims[name]
                r[o:o + n * n] += _functional_coeffs(c, n)
            else:
                r[o] += float(c)
        return r

    def unpack(self, x: np.ndarray, problem: ConicProblem) -> dict:
        out = {}
        for name, dim in problem.psd_vars:
            o = self.offsets[name]
            out[name] = _unpack(x[o:o + dim * dim], dim)
        for name in problem.scalar_vars:
            out[name] = float(x[self.offsets[name]])
        return out


def _row_scale(row: np.ndarray, const: float) -> float:
    return max(float(np.max(np.abs(row), initial=0.0)), abs(const), 1e-300)


def evaluate(expr: Affine, values: dict) -> float:
    total = expr.const
    for name, c in expr.terms.items():
        v = values[name]
        if np.ndim(v) == 2:
            total += float(np.real(np.sum(np.asarray(c) * v.T)))
        else:
            total += float(c) * float(v)
    return float(total)


def evaluate_matrix(expr: MatrixAffine, values: dict) -> np.ndarray:
    out = None if expr.const is None else np.asarray(expr.const, dtype=complex).copy()
    for name, c in expr.terms.items():
        out = c * values[name] if out is None else out + c * values[name]
    return out


def max_violation(problem: ConicProblem, values: dict) -> float:
    """Largest relative constraint violation of a candidate point."""
    layout = _Layout(problem)
    worst = 0.0
    for e in problem.ineq:
        s = max(_row_scale(layout.row(e), e.const), 1.0)
        worst = max(worst, -evaluate(e, values) / s)
    for e in problem.eq:
        s = max(_row_scale(layout.row(e), e.const), 1.0)
        worst = max(worst, abs(evaluate(e, values)) / s)
    for cone in problem.soc:
        head = evaluate(cone[0], values)
        tail = np.array([evaluate(e, values) for e in cone[1:]])
        s = max(1.0, abs(head))
        worst = max(worst, (np.linalg.norm(tail) - head) / s)
    mats = [(values[name], name) for name, _ in problem.psd_vars]
    mats += [(evaluate_matrix(m, values), m.label) for m in problem.psd]
    for X, _ in mats:
        X = hermitian_part(X)
        s = max(1.0, float(np.max(np.abs(np.diag(X)))))
        worst = max(worst, -float(np.linalg.eigvalsh(X)[0]) / s)
    return max(worst, 0.0)


def _compile(problem: ConicProblem, layout: _Layout):
    n = layout.size
    G_rows, h_vals = [], []
    for e in problem.ineq:
        r = layout.row(e)
        s = _row_scale(r, e.const)
        G_rows.append(-r / s)
        h_vals.append(e.const / s)
    q_dims = []
    for cone in problem.soc:
        rows = [layout.row(e) for e in cone]
        s = max(_row_scale(r, e.const) for r, e in zip(rows, cone))
        for r, e in zip(rows, cone):
            G_rows.append(-r / s)
            h_vals.append(e.const / s)
        q_dims.append(len(cone))
    s_dims = []
    blocks = [MatrixAffine(terms={name: 1.0}, label=name) for name, _ in problem.psd_vars]
    blocks += list(problem.psd)
    for m in blocks:
        dim = next(layout.dims[v] for v in m.terms)
        _, _, emb = _hermitian_basis(dim)
        G = np.zeros((4 * dim * dim, n))
        for name, c in m.terms.items():
            o = layout.offsets[name]
            G[:, o:o + dim * dim] -= c * emb.T
        h = np.zeros(4 * dim * dim) if m.const is None else \
            real_embedding(m.const).ravel(order="F")
        s = max(float(np.max(np.abs(G))), float(np.max(np.abs(h), initial=0.0)))
        G_rows.extend(G / s)
        h_vals.extend(h / s)
        s_dims.append(2 * dim)
    A_rows, b_vals = [], []
    for e in problem.eq:
        r = layout.row(e)
        s = _row_scale(r, e.const)
        A_rows.append(r / s)
        b_vals.append(-e.const / s)
    c = np.zeros(n)
    if problem.objective is not None:
        c = -layout.row(problem.objective)
    G = np.array(G_rows, dtype=float).reshape(-1, n)
    h = np.array(h_vals, dtype=float)
    A = np.array(A_rows, dtype=float).reshape(-1, n)
    b = np.array(b_vals, dtype=float)
    dims = {"l": len(problem.ineq), "q": q_dims, "s": s_dims}
    return c, G, h, A, b, dims


def solve(problem: ConicProblem, tolerances: Tolerances = Tolerances()) -> ConicOutcome:
    """Solve a conic problem; deterministic for identical inputs."""
    problem.validate()
    layout = _Layout(problem)
    c, G, h, A, b, dims = _compile(problem, layout)
    options = {
        "show_progress": False,
        "maxiters": tolerances.max_iters,
        "abstol": tolerances.opt_tol * 1e-1,
        "reltol": tolerances.opt_tol,
        "feastol": tolerances.feas_tol * 1e-1,
    }
    args = [cvx_matrix(c), cvx_matrix(G), cvx_matrix(h), dims]
    if A.shape[0]:
        args += [cvx_matrix(A), cvx_matrix(b)]
    # cvxopt occasionally breaks down near the feasibility boundary; a retry at
    # its default accuracy, then with the LDL factorization, usually recovers
    attempts = [(None, options),
                (None, {**options, "abstol": 1e-7, "reltol": 1e-6, "feastol": 1e-7}),
                ("ldl", options)]
    outcome = None
    for kkt, opts in attempts:
        try:
            res = cvx_solvers.conelp(*args, kktsolver=kkt, options=opts)
        except (ArithmeticError, ValueError) as exc:
            log.debug("conic solver raised %r; retrying", exc)
            continue
        outcome = _interpret(res, layout, problem, tolerances)
        if outcome.status is not Status.NUMERICAL_FAILURE:
            return outcome
    if outcome is None:
        return ConicOutcome(Status.NUMERICAL_FAILURE, solver_status="solver error")
    return outcome


def _interpret(res, layout, problem: ConicProblem, tolerances: Tolerances) -> ConicOutcome:
    status = res["status"]
    iters = int(res.get("iterations", 0) or 0)
    if status == "primal infeasible":
        return ConicOutcome(Status.INFEASIBLE, iterations=iters, solver_status=status)

    if res["x"] is None:
        return ConicOutcome(Status.NUMERICAL_FAILURE, iterations=iters, solver_status=status)
    x = np.array(res["x"]).ravel()
    values = layout.unpack(x, problem)
    viol = max_violation(problem, values)
    obj = None if problem.objective is None else evaluate(problem.objective, values)
    if viol <= tolerances.feas_tol and status in ("optimal", "unknown"):
        return ConicOutcome(Status.FEASIBLE, values, viol, iters, obj, status)
    cert = res.get("residual as primal infeasibility certificate")
    if status == "unknown" and cert is not None and cert < 1e-5:
        return ConicOutcome(Status.INFEASIBLE, None, viol, iters, None, status)
    log.debug("numerical failure: status=%s violation=%.3e", status, viol)
    return ConicOutcome(Status.NUMERICAL_FAILURE, values, viol, iters, obj, status)


def dump_problem(problem: ConicProblem, path) -> None:
    """Write a sparse text description of a problem for offline inspection."""
    layout = _Layout(problem)

    def fmt(row, const):
        nz = np.flatnonzero(row)
        return " ".join(f"{i}:{row[i]:.17g}" for i in nz) + f" | {const:.17g}"

    with open(path, "w") as f:
        for name, dim in problem.psd_vars:
            f.write(f"hermitian {name} {dim} offset {layout.offsets[name]}\n")
        for name in problem.scalar_vars:
            f.write(f"scalar {name} offset {layout.offsets[name]}\n")
        if problem.objective is not None:
            f.write(f"maximize {fmt(layout.row(problem.objective), problem.objective.const)}\n")
        for e in problem.eq:
            f.write(f"eq {e.label or '-'} {fmt(layout.row(e), e.const)}\n")
        for e in problem.ineq:
            f.write(f"ineq {e.label or '-'} {fmt(layout.row(e), e.const)}\n")
        for cone in problem.soc:
            f.write("soc\n")
            for e in cone:
                f.write(f"  {fmt(layout.row(e), e.const)}\n")
        for m in problem.psd:
            terms = " ".join(f"{k}*{v:.17g}" for k, v in m.terms.items())
            f.write(f"psd {m.label or '-'} {terms}\n")
