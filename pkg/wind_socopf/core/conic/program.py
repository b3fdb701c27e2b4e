"""Standard-form convex program: quadratic objective, linear rows, second-order cones.

    minimize    ½ xᵀ P x + qᵀ x + c0
    subject to  A x = b
                G x ≤ h
                ‖C_k[1:] x + d_k[1:]‖₂ ≤ C_k[0] x + d_k[0]     for every cone block k
                lb ≤ x ≤ ub

Dual convention (relied on by the exactness diagnostic):

    L = f + yᵀ(A x − b) + zᵀ(G x − h) − Σ_k s_kᵀ(C_k x + d_k) − μ_lᵀ(x − lb) + μ_uᵀ(x − ub)

with z, μ_l, μ_u ≥ 0 and each s_k in its (self-dual) cone.
"""
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

FORMAT_HEADER = "# wind-socopf conic program v1"


@dataclass(frozen=True, eq=False)
class SocBlock:
    """Affine cone rows; row 0 is the head, rows 1.. the tail"""

    rows: sp.csr_matrix
    offset: np.ndarray
    label: str = ""

    @property
    def dim(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True, eq=False)
class ConicProgram:
    n: int
    P: sp.csr_matrix
    q: np.ndarray
    c0: float
    A: sp.csr_matrix
    b: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    cones: tuple[SocBlock, ...]
    lb: np.ndarray
    ub: np.ndarray
    var_labels: tuple[str, ...] = ()
    eq_labels: tuple[str, ...] = ()
    ineq_labels: tuple[str, ...] = ()

    @property
    def n_eq(self) -> int:
        return int(self.A.shape[0])

    @property
    def n_ineq(self) -> int:
        return int(self.G.shape[0])

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.P @ x) + self.q @ x + self.c0)


class SolveStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class ConicSolution:
    status: SolveStatus
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None  # equalities
    z: Optional[np.ndarray] = None  # inequalities
    s: list[np.ndarray] = field(default_factory=list)  # cone blocks
    mu_lb: Optional[np.ndarray] = None
    mu_ub: Optional[np.ndarray] = None
    objective: float = math.nan
    residuals: dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    solve_seconds: float = 0.0
    accurate: bool = True
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL


def kkt_residuals(program: ConicProgram, sol: ConicSolution) -> dict[str, float]:
    """Infinity-norm KKT residuals of a primal/dual pair under the module's convention."""
    x = sol.x
    finite_lb = np.isfinite(program.lb)
    finite_ub = np.isfinite(program.ub)
    cone_values = [blk.rows @ x + blk.offset for blk in program.cones]

    res = {
        "primal_eq": float(np.max(np.abs(program.A @ x - program.b), initial=0.0)),
        "primal_ineq": float(np.max(program.G @ x - program.h, initial=0.0)),
        "primal_bounds": float(
            max(
                np.max(program.lb[finite_lb] - x[finite_lb], initial=0.0),
                np.max(x[finite_ub] - program.ub[finite_ub], initial=0.0),
            )
        ),
        "primal_cone": float(
            max((np.linalg.norm(v[1:]) - v[0] for v in cone_values), default=0.0)
        ),
    }
    res["primal_cone"] = max(res["primal_cone"], 0.0)

    if sol.y is None or sol.z is None or sol.mu_lb is None or sol.mu_ub is None:
        return res
    if sol.y.size != program.n_eq or sol.z.size != program.n_ineq:
        return res
    if [s.size for s in sol.s] != [blk.dim for blk in program.cones]:
        return res

    grad = program.P @ x + program.q + program.A.T @ sol.y + program.G.T @ sol.z
    grad = grad - sol.mu_lb + sol.mu_ub
    for blk, s in zip(program.cones, sol.s):
        grad = grad - blk.rows.T @ s

    slack_ineq = program.h - program.G @ x
    comp = float(np.abs(sol.z @ slack_ineq)) if sol.z.size else 0.0
    comp += float(np.abs(sol.mu_lb[finite_lb] @ (x[finite_lb] - program.lb[finite_lb])))
    comp += float(np.abs(sol.mu_ub[finite_ub] @ (program.ub[finite_ub] - x[finite_ub])))
    comp += sum(float(np.abs(s @ v)) for s, v in zip(sol.s, cone_values))

    res["stationarity"] = float(np.max(np.abs(grad), initial=0.0))
    res["dual_ineq"] = float(
        max(
            np.max(-sol.z, initial=0.0),
            np.max(-sol.mu_lb, initial=0.0),
            np.max(-sol.mu_ub, initial=0.0),
        )
    )
    res["complementarity"] = comp
    return res


class ProgramBuilder:
    """Row-by-row assembly of a ConicProgram"""

    def __init__(self):
        self.n = 0
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._var_labels: list[str] = []
        self._q: dict[int, float] = {}
        self._p_diag: dict[int, float] = {}
        self.c0 = 0.0
        self._eq: list[tuple[Sequence[int], Sequence[float], float]] = []
        self._eq_labels: list[str] = []
        self._ineq: list[tuple[Sequence[int], Sequence[float], float]] = []
        self._ineq_labels: list[str] = []
        self._cones: list[SocBlock] = []

    def add_variables(
        self, name: str, count: int, lb: object = -np.inf, ub: object = np.inf
    ) -> np.ndarray:
        start = self.n
        lb = np.broadcast_to(np.asarray(lb, dtype=float), (count,))
        ub = np.broadcast_to(np.asarray(ub, dtype=float), (count,))
        self._lb.extend(lb.tolist())
        self._ub.extend(ub.tolist())
        self._var_labels.extend(f"{name}[{k}]" for k in range(count))
        self.n += count
        return np.arange(start, self.n)

    def set_bounds(self, index: int, lb: float, ub: float) -> None:
        self._lb[index] = lb
        self._ub[index] = ub

    def add_linear_cost(self, index: int, value: float) -> None:
        self._q[index] = self._q.get(index, 0.0) + value

    def add_quadratic_cost(self, index: int, value: float) -> None:
        """Adds ½·value·x_index² to the objective"""
        self._p_diag[index] = self._p_diag.get(index, 0.0) + value

    def add_eq(self, cols: Sequence[int], vals: Sequence[float], rhs: float, label: str = "") -> int:
        self._eq.append((cols, vals, rhs))
        self._eq_labels.append(label)
        return len(self._eq) - 1

    def add_ineq(self, cols: Sequence[int], vals: Sequence[float], rhs: float, label: str = "") -> int:
        """Adds the row Σ vals·x[cols] ≤ rhs"""
        self._ineq.append((cols, vals, rhs))
        self._ineq_labels.append(label)
        return len(self._ineq) - 1

    def add_soc(
        self, rows: Sequence[tuple[Sequence[int], Sequence[float], float]], label: str = ""
    ) -> int:
        """Adds ‖rows[1:]‖ ≤ rows[0]; each row is (cols, vals, constant)"""
        matrix = _rows_to_csr(rows, self.n)
        offset = np.array([const for _, _, const in rows], dtype=float)
        self._cones.append(SocBlock(matrix, offset, label))
        return len(self._cones) - 1

    @property
    def n_eq(self) -> int:
        return len(self._eq)

    @property
    def n_ineq(self) -> int:
        return len(self._ineq)

    def build(self) -> ConicProgram:
        n = self.n
        q = np.zeros(n)
        for k, v in self._q.items():
            q[k] = v
        diag = np.zeros(n)
        for k, v in self._p_diag.items():
            diag[k] = v
        # cone blocks were built while n was still growing
        cones = tuple(
            SocBlock(_resize(blk.rows, n), blk.offset, blk.label) for blk in self._cones
        )
        return ConicProgram(
            n=n,
            P=sp.diags(diag, format="csr"),
            q=q,
            c0=float(self.c0),
            A=_rows_to_csr(self._eq, n),
            b=np.array([rhs for _, _, rhs in self._eq], dtype=float),
            G=_rows_to_csr(self._ineq, n),
            h=np.array([rhs for _, _, rhs in self._ineq], dtype=float),
            cones=cones,
            lb=np.array(self._lb, dtype=float),
            ub=np.array(self._ub, dtype=float),
            var_labels=tuple(self._var_labels),
            eq_labels=tuple(self._eq_labels),
            ineq_labels=tuple(self._ineq_labels),
        )


def _rows_to_csr(rows: Sequence[tuple[Sequence[int], Sequence[float], float]], n: int) -> sp.csr_matrix:
    row_idx, col_idx, data = [], [], []
    for r, (cols, vals, _) in enumerate(rows):
        row_idx.extend([r] * len(cols))
        col_idx.extend(int(c) for c in cols)
        data.extend(float(v) for v in vals)
    # duplicate (row, col) entries are summed
    return sp.coo_matrix((data, (row_idx, col_idx)), shape=(len(rows), n)).tocsr()


def _resize(matrix: sp.csr_matrix, n: int) -> sp.csr_matrix:
    coo = matrix.tocoo()
    return sp.coo_matrix((coo.data, (coo.row, coo.col)), shape=(coo.shape[0], n)).tocsr()


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    message: str


def validate_program(program: ConicProgram, psd_tol: float = 1e-9) -> list[Diagnostic]:
    """Structural checks; report-only, never raises."""
    out: list[Diagnostic] = []
    n = program.n

    def error(msg: str) -> None:
        out.append(Diagnostic("error", msg))

    def warning(msg: str) -> None:
        out.append(Diagnostic("warning", msg))

    if program.P.shape != (n, n):
        error(f"objective matrix has shape {program.P.shape}, expected {(n, n)}")
    if program.q.shape != (n,):
        error(f"linear objective has shape {program.q.shape}, expected {(n,)}")
    if program.A.shape[1] != n or program.A.shape[0] != program.b.size:
        error(f"equality block {program.A.shape} inconsistent with rhs of size {program.b.size}")
    if program.G.shape[1] != n or program.G.shape[0] != program.h.size:
        error(f"inequality block {program.G.shape} inconsistent with rhs of size {program.h.size}")
    if program.lb.shape != (n,) or program.ub.shape != (n,):
        error("variable bounds do not match the variable count")
    elif np.any(program.lb > program.ub):
        bad = int(np.argmax(program.lb > program.ub))
        error(f"variable {bad} has lb > ub")

    for k, blk in enumerate(program.cones):
        if blk.dim < 2:
            error(f"cone block {k} ({blk.label}) has dimension {blk.dim} < 2")
        if blk.rows.shape[1] != n:
            error(f"cone block {k} ({blk.label}) references {blk.rows.shape[1]} variables, expected {n}")

    for name, arr in (("q", program.q), ("b", program.b), ("h", program.h)):
        if not np.all(np.isfinite(arr)):
            error(f"non-finite entries in {name}")

    if program.P.shape == (n, n) and n > 0:
        asym = abs(program.P - program.P.T)
        if asym.nnz and asym.max() > psd_tol:
            error("objective matrix is not symmetric")
        off_diag = program.P - sp.diags(program.P.diagonal())
        if off_diag.count_nonzero() == 0:
            min_eig = float(program.P.diagonal().min())
        else:
            min_eig = float(np.linalg.eigvalsh(program.P.toarray()).min())
        if min_eig < -psd_tol:
            warning(f"objective matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")

    # a free variable with linear cost and no curvature that no constraint touches
    touched = np.zeros(n, dtype=bool)
    for block in [program.A, program.G] + [blk.rows for blk in program.cones]:
        if block.shape[1] == n and block.nnz:
            touched[np.unique(block.tocoo().col)] = True
    if program.P.shape == (n, n):
        curvature = program.P.diagonal() > 0
        descending_free = ((program.q > 0) & ~np.isfinite(program.lb)) | (
            (program.q < 0) & ~np.isfinite(program.ub)
        )
        for k in np.flatnonzero(descending_free & ~touched & ~curvature):
            warning(f"variable {k} is unbounded below in the objective")
    return out


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_matrix(lines: list[str], name: str, matrix: sp.spmatrix) -> None:
    coo = matrix.tocoo()
    lines.append(f"{name} {coo.shape[0]} {coo.shape[1]} {coo.nnz}")
    for r, c, v in zip(coo.row, coo.col, coo.data):
        lines.append(f"{r} {c} {_fmt(v)}")


def _write_vector(lines: list[str], name: str, vec: np.ndarray) -> None:
    lines.append(f"{name} {vec.size}")
    lines.extend(_fmt(v) for v in vec)


def dump_program(program: ConicProgram, path: str) -> None:
    """Write the program in the sparse-triplet text format.

    Sections in order: ``n``, ``c0``, matrix ``P``, vector ``q``, ``lb``, ``ub``,
    matrix ``A``, vector ``b``, matrix ``G``, vector ``h``, then ``cones <count>``
    followed by one matrix ``C`` and one vector ``d`` per cone block. A matrix
    section header is ``<name> <rows> <cols> <nnz>`` followed by ``row col value``
    lines; a vector header is ``<name> <size>`` followed by one value per line.
    """
    lines = [FORMAT_HEADER, f"n {program.n}", f"c0 {_fmt(program.c0)}"]
    _write_matrix(lines, "P", program.P)
    _write_vector(lines, "q", program.q)
    _write_vector(lines, "lb", program.lb)
    _write_vector(lines, "ub", program.ub)
    _write_matrix(lines, "A", program.A)
    _write_vector(lines, "b", program.b)
    _write_matrix(lines, "G", program.G)
    _write_vector(lines, "h", program.h)
    lines.append(f"cones {len(program.cones)}")
    for blk in program.cones:
        _write_matrix(lines, "C", blk.rows)
        _write_vector(lines, "d", blk.offset)
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


class _Reader:
    def __init__(self, lines: list[str]):
        self.lines = [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]
        self.pos = 0

    def header(self, name: str) -> list[str]:
        parts = self.lines[self.pos].split()
        if parts[0] != name:
            raise ValueError(f"expected section {name!r}, found {parts[0]!r}")
        self.pos += 1
        return parts[1:]

    def matrix(self, name: str) -> sp.csr_matrix:
        rows, cols, nnz = (int(v) for v in self.header(name))
        r, c, d = [], [], []
        for line in self.lines[self.pos : self.pos + nnz]:
            i, j, v = line.split()
            r.append(int(i))
            c.append(int(j))
            d.append(float(v))
        self.pos += nnz
        return sp.coo_matrix((d, (r, c)), shape=(rows, cols)).tocsr()

    def vector(self, name: str) -> np.ndarray:
        (size,) = (int(v) for v in self.header(name))
        values = np.array([float(v) for v in self.lines[self.pos : self.pos + size]], dtype=float)
        self.pos += size
        return values


def load_program(path: str) -> ConicProgram:
    with open(path, "r") as f:
        reader = _Reader(f.readlines())
    (n,) = (int(v) for v in reader.header("n"))
    (c0,) = (float(v) for v in reader.header("c0"))
    P = reader.matrix("P")
    q = reader.vector("q")
    lb = reader.vector("lb")
    ub = reader.vector("ub")
    A = reader.matrix("A")
    b = reader.vector("b")
    G = reader.matrix("G")
    h = reader.vector("h")
    (count,) = (int(v) for v in reader.header("cones"))
    cones = []
    for _ in range(count):
        rows = reader.matrix("C")
        offset = reader.vector("d")
        cones.append(SocBlock(rows, offset))
    return ConicProgram(n, P, q, c0, A, b, G, h, tuple(cones), lb, ub)
