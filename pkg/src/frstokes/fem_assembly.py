"""P1 finite element assembly on the unit square.

Assembles stiffness, consistent mass and lumped (vertex-quadrature) mass
matrices, load vectors for several triangle quadrature rules, and the L2
projection onto the space V_h of continuous piecewise linears vanishing on
the boundary.  Also defines the problem description consumed by the time
steppers: fractional order alpha, damping gamma, a Lipschitz nonlinearity
and an initial-data descriptor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import numpy.typing as npt

from .mesh import TriMesh, evaluate_p1
from .sparse_linalg import DiagMatrix, SparseSymMatrix, cg_solve

__all__ = [
    "NodalField",
    "assemble_stiffness",
    "assemble_mass",
    "assemble_lumped_mass",
    "load_vector",
    "l2_project",
    "l2_norm",
    "l2_error_vs_reference",
    "l2_error_vs_function",
    "Nonlinearity",
    "sqrt_one_plus_u2",
    "zero_source",
    "InitialData",
    "CaseAInitialData",
    "CaseBInitialData",
    "SingleModeInitialData",
    "CustomInitialData",
    "initial_data_for_case",
    "ProblemSpec",
]

FloatArray = npt.NDArray[np.float64]

_LOCAL_MASS = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0

# Quadrature rules on the reference triangle: (barycentric coords, weights),
# weights summing to one (scaled by the triangle area on use).
_B1, _A1, _W1 = 0.091576213509771, 0.816847572980459, 0.109951743655322
_B2, _A2, _W2 = 0.445948490915965, 0.108103018168070, 0.223381589678011
QUAD_RULES: dict[str, tuple[np.ndarray, np.ndarray]] = {
    "vertex": (np.eye(3), np.full(3, 1.0 / 3.0)),
    "midpoint": (
        np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]),
        np.full(3, 1.0 / 3.0),
    ),
    # 6-point rule, exact for polynomials of degree 4; all nodes interior.
    "order4": (
        np.array(
            [
                [_A1, _B1, _B1],
                [_B1, _A1, _B1],
                [_B1, _B1, _A1],
                [_A2, _B2, _B2],
                [_B2, _A2, _B2],
                [_B2, _B2, _A2],
            ]
        ),
        np.array([_W1, _W1, _W1, _W2, _W2, _W2]),
    ),
}


@dataclass(frozen=True)
class NodalField:
    """Nodal values of a P1 function over all mesh nodes."""

    mesh: TriMesh
    values: FloatArray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.mesh.n_nodes,):
            raise ValueError(
                f"{vals.shape[0] if vals.ndim else 0} values for "
                f"{self.mesh.n_nodes} nodes"
            )
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, mesh: TriMesh) -> "NodalField":
        return cls(mesh, np.zeros(mesh.n_nodes))

    @classmethod
    def from_interior(cls, mesh: TriMesh, interior_values) -> "NodalField":
        """Embed interior coefficients into a full vector, zero trace."""
        vals = np.zeros(mesh.n_nodes)
        vals[mesh.interior_nodes] = interior_values
        return cls(mesh, vals)

    @classmethod
    def interpolate(cls, mesh: TriMesh, fn) -> "NodalField":
        return cls(mesh, np.asarray(fn(mesh.nodes[:, 0], mesh.nodes[:, 1]), dtype=float))

    def interior(self) -> FloatArray:
        return self.values[self.mesh.interior_nodes]


def _triangle_geometry(mesh: TriMesh):
    """Areas and P1 shape-function gradients, vectorized over triangles."""
    p = mesh.nodes[mesh.triangles]  # (m, 3, 2)
    x = p[..., 0]
    y = p[..., 1]
    nxt = [1, 2, 0]
    prv = [2, 0, 1]
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (
        y[:, 1] - y[:, 0]
    )
    if np.any(area2 <= 0):
        raise ValueError("degenerate or misoriented triangle in assembly")
    grad = np.empty((len(x), 3, 2))
    grad[:, :, 0] = (y[:, nxt] - y[:, prv]) / area2[:, None]
    grad[:, :, 1] = (x[:, prv] - x[:, nxt]) / area2[:, None]
    return 0.5 * area2, grad


def _interior_block(full, mesh: TriMesh) -> SparseSymMatrix:
    idx = mesh.interior_nodes
    return SparseSymMatrix(full._csr[idx][:, idx])


def _scatter_symmetric(mesh: TriMesh, local: np.ndarray) -> SparseSymMatrix:
    tris = mesh.triangles
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    return SparseSymMatrix.from_coo(rows, cols, local.ravel(), mesh.n_nodes)


def assemble_stiffness(mesh: TriMesh, full: bool = False) -> SparseSymMatrix:
    """Stiffness matrix (grad v, grad w); interior DOFs unless ``full``."""
    areas, grad = _triangle_geometry(mesh)
    local = areas[:, None, None] * np.einsum("tid,tjd->tij", grad, grad)
    mat = _scatter_symmetric(mesh, local)
    return mat if full else _interior_block(mat, mesh)


def assemble_mass(mesh: TriMesh, full: bool = False) -> SparseSymMatrix:
    """Consistent mass matrix (v, w); interior DOFs unless ``full``."""
    areas = mesh.triangle_areas()
    local = areas[:, None, None] * _LOCAL_MASS[None, :, :]
    mat = _scatter_symmetric(mesh, local)
    return mat if full else _interior_block(mat, mesh)


def assemble_lumped_mass(mesh: TriMesh, full: bool = False) -> DiagMatrix:
    """Diagonal mass from vertex quadrature: D_ii = sum of |K|/3 over K at i.

    Row-for-row this equals the row sums of the consistent mass matrix.
    """
    areas = mesh.triangle_areas()
    diag = np.zeros(mesh.n_nodes)
    np.add.at(diag, mesh.triangles.ravel(), np.repeat(areas / 3.0, 3))
    if full:
        return DiagMatrix(diag)
    return DiagMatrix(diag[mesh.interior_nodes])


def load_vector(mesh: TriMesh, g, rule: str = "order4") -> FloatArray:
    """Full-node load b_i ~ integral of g * phi_i, by triangle quadrature.

    ``g`` must be vectorized over coordinate arrays.  Rules: ``vertex``
    (degree 1), ``midpoint`` (edge midpoints, degree 2), ``order4``
    (6 interior points, degree 4).
    """
    try:
        bary, weights = QUAD_RULES[rule]
    except KeyError:
        raise ValueError(f"unknown quadrature rule {rule!r}") from None
    areas = mesh.triangle_areas()
    p = mesh.nodes[mesh.triangles]  # (m, 3, 2)
    b = np.zeros(mesh.n_nodes)
    for q in range(len(weights)):
        pts = np.einsum("j,mjd->md", bary[q], p)
        gvals = np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float)
        contrib = (weights[q] * areas * gvals)[:, None] * bary[q][None, :]
        np.add.at(b, mesh.triangles.ravel(), contrib.ravel())
    return b


def l2_project(mesh: TriMesh, g, rule: str = "order4", tol: float = 1e-12) -> NodalField:
    """L2 projection of g onto V_h (boundary values zero)."""
    if mesh.n_interior == 0:
        return NodalField.zeros(mesh)
    b = load_vector(mesh, g, rule=rule)[mesh.interior_nodes]
    M = assemble_mass(mesh)
    return NodalField.from_interior(mesh, cg_solve(M, b, tol=tol))


def l2_norm(mesh: TriMesh, fld) -> float:
    """L2(Omega) norm of a P1 field, via the full-node consistent mass."""
    vals = np.asarray(getattr(fld, "values", fld), dtype=float)
    M = assemble_mass(mesh, full=True)
    return float(np.sqrt(max(vals.dot(M.matvec(vals)), 0.0)))


def l2_error_vs_reference(coarse: tuple[TriMesh, NodalField],
                          fine: tuple[TriMesh, NodalField]) -> float:
    """L2 distance between a coarse-mesh field and a finer reference.

    The coarse P1 function is evaluated at the fine nodes (for the same
    mesh this degenerates to a direct nodal difference) and the difference
    is measured in the fine mesh's consistent mass norm.
    """
    cmesh, cfield = coarse
    fmesh, ffield = fine
    fvals = np.asarray(getattr(ffield, "values", ffield), dtype=float)
    cvals = np.asarray(getattr(cfield, "values", cfield), dtype=float)
    if cmesh is fmesh or (
        cmesh.n_nodes == fmesh.n_nodes and np.array_equal(cmesh.nodes, fmesh.nodes)
    ):
        diff = cvals - fvals
    else:
        diff = evaluate_p1(cmesh, cvals, fmesh.nodes) - fvals
    return l2_norm(fmesh, diff)


def l2_error_vs_function(mesh: TriMesh, fld, fn, rule: str = "order4") -> float:
    """L2 distance between a P1 field and a smooth function, by quadrature."""
    vals = np.asarray(getattr(fld, "values", fld), dtype=float)
    bary, weights = QUAD_RULES[rule]
    areas = mesh.triangle_areas()
    p = mesh.nodes[mesh.triangles]
    v = vals[mesh.triangles]  # (m, 3)
    acc = 0.0
    for q in range(len(weights)):
        pts = np.einsum("j,mjd->md", bary[q], p)
        diff = v.dot(bary[q]) - np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float)
        acc += weights[q] * np.sum(areas * diff**2)
    return float(np.sqrt(max(acc, 0.0)))


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Nonlinearity:
    """Pointwise source f(u) with a known Lipschitz constant."""

    fn: callable
    lipschitz: float
    name: str = "custom"

    def __call__(self, u):
        return self.fn(u)


def sqrt_one_plus_u2() -> Nonlinearity:
    return Nonlinearity(lambda u: np.sqrt(1.0 + u * u), 1.0, "sqrt(1+u^2)")


def zero_source() -> Nonlinearity:
    return Nonlinearity(lambda u: np.zeros_like(np.asarray(u, dtype=float)), 0.0, "zero")


class InitialData:
    """Initial condition descriptor: a sampler plus its V_h realization."""

    cache_tag: str | None = None

    def sample(self, x, y):
        raise NotImplementedError

    def field(self, mesh: TriMesh) -> NodalField:
        """Default realization: L2 projection onto V_h."""
        return l2_project(mesh, self.sample)


class CaseAInitialData(InitialData):
    """u0(x, y) = x y (1-x) (1-y), a smooth bump vanishing on the boundary."""

    cache_tag = "a"

    def sample(self, x, y):
        return x * y * (1.0 - x) * (1.0 - y)


class CaseBInitialData(InitialData):
    """u0 = indicator of (0, 1/2] x (0, 1); discontinuity along x = 1/2."""

    cache_tag = "b"

    def sample(self, x, y):
        return np.where(np.asarray(x, dtype=float) <= 0.5, 1.0, 0.0)


class SingleModeInitialData(InitialData):
    """u0 = sin(k pi x) sin(l pi y), realized as its nodal interpolant.

    Interpolation (rather than projection) keeps the discrete data exactly
    proportional to a discrete eigenvector on the symmetric family, which
    is what the scalar mode-reduction checks rely on.
    """

    def __init__(self, k: int = 1, l: int = 1):
        self.k = int(k)
        self.l = int(l)
        self.cache_tag = f"mode-{self.k}-{self.l}"

    def sample(self, x, y):
        return np.sin(self.k * np.pi * x) * np.sin(self.l * np.pi * y)

    def field(self, mesh: TriMesh) -> NodalField:
        fld = NodalField.interpolate(mesh, self.sample)
        vals = fld.values.copy()
        vals[mesh.boundary_mask] = 0.0
        return NodalField(mesh, vals)


class CustomInitialData(InitialData):
    def __init__(self, fn, cache_tag: str | None = None):
        self._fn = fn
        self.cache_tag = cache_tag

    def sample(self, x, y):
        return self._fn(x, y)


def initial_data_for_case(case: str) -> InitialData:
    if case == "a":
        return CaseAInitialData()
    if case == "b":
        return CaseBInitialData()
    if case == "mode":
        return SingleModeInitialData(1, 1)
    raise ValueError(f"unknown problem case {case!r}")


@dataclass(frozen=True)
class ProblemSpec:
    """Continuous problem data for d_t u - (1 + gamma d_t^alpha) Lap u = f(u)."""

    alpha: float
    gamma: float
    T: float
    nonlinearity: Nonlinearity = field(default_factory=sqrt_one_plus_u2)
    initial_data: InitialData = field(default_factory=CaseAInitialData)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.T <= 0:
            raise ValueError(f"final time must be positive, got {self.T}")
        if self.nonlinearity.lipschitz < 0:
            raise ValueError("Lipschitz constant must be nonnegative")
