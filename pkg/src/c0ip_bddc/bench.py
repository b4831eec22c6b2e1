"""Experiment drivers for the eigenvalue, condition-number and iteration tables,
and the manufactured-solution convergence study."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from .assembly import assemble_global, assemble_load, assemble_standard, gauss, to_modified
from .bddc import BDDCPreconditioner, FullPreconditioner
from .errors import InvalidParameterError, MisalignmentError
from .krylov import extreme_eigs, pcg
from .modified_q2 import build_space, tensor_basis
from .splitting import SplitOperators, SubspaceSplit

log = logging.getLogger(__name__)

DEFAULT_SWEEP = (8, 12, 16, 20, 24)
CSV_COLUMNS = ("h", "H", "eta", "lambda_max", "lambda_min", "kappa",
               "niter_plain", "niter_prec", "wall_time_s", "kappa_A")
MMS_COLUMNS = ("h", "energy_error", "l2_error", "energy_order", "l2_order")
RHS_MODES = ("unit", "mms", "random", "ones")


@dataclass
class ExperimentConfig:
    n: tuple[int, ...] = DEFAULT_SWEEP
    m: int = 4
    eta: float = 5.0
    tol: float = 1e-6
    max_iter: int = 10_000
    table: int = 1
    rhs: str = "unit"
    seed: int = 20180101
    timings: bool = False

    def __post_init__(self):
        if self.eta <= 0:
            raise InvalidParameterError(f"eta must be positive, got {self.eta}")
        if self.m < 1:
            raise InvalidParameterError(f"m must be positive, got {self.m}")
        if self.table not in (1, 2, 3):
            raise InvalidParameterError(f"table must be 1, 2 or 3, got {self.table}")
        if self.rhs not in RHS_MODES:
            raise InvalidParameterError(f"rhs must be one of {RHS_MODES}, got {self.rhs!r}")


@dataclass
class ReportRow:
    h: float
    H: float
    eta: float
    lambda_max: float | None = None
    lambda_min: float | None = None
    kappa: float | None = None
    niter_plain: int | None = None
    niter_prec: int | None = None
    wall_time_s: float | None = None
    kappa_A: float | None = None
    extra: dict = field(default_factory=dict, repr=False, compare=False)


# -- manufactured solution ---------------------------------------------------

PI = math.pi


def mms_u(x, y):
    return np.sin(PI * x) ** 2 * np.sin(PI * y) ** 2


def mms_f(x, y):
    """Bilaplacian of ``sin^2(pi x) sin^2(pi y)``."""
    sx, sy = np.sin(PI * x) ** 2, np.sin(PI * y) ** 2
    cx, cy = np.cos(2 * PI * x), np.cos(2 * PI * y)
    return 8 * PI**4 * (cx * cy - cx * sy - sx * cy)


def mms_hessian(x, y):
    """``(u_xx, u_xy, u_yy)`` of the manufactured solution."""
    sx, sy = np.sin(PI * x) ** 2, np.sin(PI * y) ** 2
    d2x, d2y = 2 * PI**2 * np.cos(2 * PI * x), 2 * PI**2 * np.cos(2 * PI * y)
    d1x, d1y = PI * np.sin(2 * PI * x), PI * np.sin(2 * PI * y)
    return d2x * sy, d1x * d1y, sx * d2y


def _rhs(space, A, mode: str, seed: int) -> np.ndarray:
    if mode == "unit":
        return assemble_load(space, lambda x, y: np.ones_like(x))
    if mode == "mms":
        return assemble_load(space, mms_f)
    if mode == "random":
        return np.random.default_rng(seed).standard_normal(space.N)
    if mode == "ones":
        return A @ np.ones(space.N)
    raise InvalidParameterError(f"unknown rhs mode {mode!r}")


# -- table rows ---------------------------------------------------------------

def _prepare(n: int, m: int, eta: float):
    space = build_space(n, m)
    split = SubspaceSplit(space)
    return space, split


def table1_row(n: int, m: int, eta: float) -> ReportRow:
    """Eigenvalues of B_BDDC S_h; S_h comes from subdomain Schur complements only."""
    _, split = _prepare(n, m, eta)
    bddc = BDDCPreconditioner(split, eta)
    S = bddc.schur_from_subdomains()
    lmin, lmax, kappa = extreme_eigs(bddc.matrix, S, split.n_gamma)
    return ReportRow(1.0 / n, 1.0 / m, eta, lmax, lmin, kappa)


def table2_row(n: int, m: int, eta: float) -> ReportRow:
    space, split = _prepare(n, m, eta)
    A = assemble_global(space, eta)
    ops = SplitOperators(split, A, eta)
    B = FullPreconditioner(ops, BDDCPreconditioner(split, eta))
    lmin, lmax, kappa = extreme_eigs(B.apply(np.eye(space.N)), A, space.N)
    ev = np.linalg.eigvalsh(A.toarray())
    return ReportRow(1.0 / n, 1.0 / m, eta, lmax, lmin, kappa, kappa_A=float(ev[-1] / ev[0]))


def table3_row(n: int, m: int, eta: float, tol: float, max_iter: int, rhs: str,
               seed: int) -> ReportRow:
    space, split = _prepare(n, m, eta)
    A = assemble_global(space, eta)
    ops = SplitOperators(split, A, eta)
    B = FullPreconditioner(ops, BDDCPreconditioner(split, eta))
    b = _rhs(space, A, rhs, seed)
    _, plain = pcg(lambda v: A @ v, None, b, tol, max_iter)
    _, prec = pcg(lambda v: A @ v, B, b, tol, max_iter)
    for name, rep in (("plain", plain), ("preconditioned", prec)):
        if not rep.converged:
            log.warning("%s CG did not converge at n=%d within %d iterations", name, n, max_iter)
    return ReportRow(1.0 / n, 1.0 / m, eta, niter_plain=plain.iterations,
                     niter_prec=prec.iterations,
                     extra={"plain": plain, "prec": prec})


def run_table(config: ExperimentConfig) -> list[ReportRow]:
    rows = []
    for n in sorted(set(config.n)):
        if n % config.m:
            log.warning("skipping n=%d: m=%d does not divide it", n, config.m)
            continue
        t0 = time.perf_counter()
        if config.table == 1:
            row = table1_row(n, config.m, config.eta)
        elif config.table == 2:
            row = table2_row(n, config.m, config.eta)
        else:
            row = table3_row(n, config.m, config.eta, config.tol, config.max_iter,
                             config.rhs, config.seed)
        if config.timings:
            row.wall_time_s = time.perf_counter() - t0
        rows.append(row)
    # largest h first
    rows.sort(key=lambda r: -r.h)
    return rows


# -- manufactured solution convergence --------------------------------------

@dataclass
class ConvergenceRow:
    h: float
    energy_error: float
    l2_error: float
    energy_order: float | None = None
    l2_order: float | None = None


def discretization_errors(n: int, eta: float = 5.0, nq: int = 5) -> tuple[float, float]:
    """Energy-seminorm and L2 errors of the C0IP solution for the manufactured problem."""
    space = build_space(n, 1)
    mesh = space.mesh
    A = assemble_global(space, eta)
    b = assemble_load(space, mms_f, nq=nq)
    uh = np.linalg.solve(A.toarray(), b)
    u_nodal = space.C @ uh

    t, w = gauss(nq)
    xi, et = (a.ravel() for a in np.meshgrid(t, t))
    wq = np.outer(w, w).ravel() * mesh.h**2
    x0 = mesh.elements[:, 0] * mesh.h
    y0 = mesh.elements[:, 1] * mesh.h
    X = x0[:, None] + xi[None, :] * mesh.h
    Y = y0[:, None] + et[None, :] * mesh.h
    local = u_nodal[mesh.element_nodes]  # (n_el, 9)

    val = local @ tensor_basis(xi, et)
    l2 = np.sqrt(np.sum(wq * (mms_u(X, Y) - val) ** 2))

    uxx, uxy, uyy = mms_hessian(X, Y)
    exx = uxx - local @ tensor_basis(xi, et, 2, 0, mesh.h)
    exy = uxy - local @ tensor_basis(xi, et, 1, 1, mesh.h)
    eyy = uyy - local @ tensor_basis(xi, et, 0, 2, mesh.h)
    broken = np.sum(wq * (exx**2 + 2 * exy**2 + eyy**2))
    # the exact solution has no normal-derivative jumps
    P = to_modified(space, assemble_standard(mesh, 1.0, consistency=False, hessian=False))
    jumps = float(uh @ (P @ uh))
    return float(np.sqrt(broken + jumps)), float(l2)


def mms_convergence(ns=(8, 16, 24), eta: float = 5.0) -> list[ConvergenceRow]:
    rows: list[ConvergenceRow] = []
    for n in sorted(ns):
        e, l2 = discretization_errors(n, eta)
        row = ConvergenceRow(1.0 / n, e, l2)
        if rows:
            prev = rows[-1]
            ratio = math.log(prev.h / row.h)
            row.energy_order = math.log(prev.energy_error / e) / ratio
            row.l2_order = math.log(prev.l2_error / l2) / ratio
            if e > prev.energy_error or l2 > prev.l2_error:
                raise ArithmeticError(f"errors grow under refinement at h=1/{n}")
        rows.append(row)
    return rows


# -- output -----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10g}"


def _columns(rows) -> tuple[str, ...]:
    return MMS_COLUMNS if rows and isinstance(rows[0], ConvergenceRow) else CSV_COLUMNS


def _as_dict(row) -> dict:
    d = {f.name: getattr(row, f.name) for f in fields(row) if f.name != "extra"}
    return d


def render(rows, fmt: str) -> str:
    if not rows:
        raise ValueError("no rows")
    cols = _columns(rows)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for r in rows:
            d = _as_dict(r)
            writer.writerow([_fmt(d[c]) for c in cols])
        return buf.getvalue()
    if fmt == "md":
        lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
        for r in rows:
            d = _as_dict(r)
            lines.append("| " + " | ".join(_fmt(d[c]) for c in cols) + " |")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        return json.dumps([_as_dict(r) for r in rows], indent=2) + "\n"
    raise InvalidParameterError(f"unknown format {fmt!r}")


def rows_from_json(text: str) -> list:
    data = json.loads(text)
    if data and "energy_error" in data[0]:
        return [ConvergenceRow(**d) for d in data]
    return [ReportRow(**d) for d in data]


def emit(rows, fmt: str = "csv", path=None) -> str:
    text = render(rows, fmt)
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)
    return text
