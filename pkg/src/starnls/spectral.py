"""Linearization operators around the ground state and stability criteria.

Decomposing Psi = (Psi0 + eta + i rho) e^{i omega t} and dropping quadratic
terms turns the graph NLS into the canonical system d/dt (eta, rho) =
J L (eta, rho) with L = diag(L_minus, L_plus) and

    L_plus  = -d^2/dx^2 + omega - |Psi0|^(2 mu)          (annihilates Psi0),
    L_minus = -d^2/dx^2 + omega - (2 mu + 1)|Psi0|^(2 mu),

both with the delta vertex condition.  Note the labeling follows the source
convention in which L_plus carries the weaker potential and has Psi0 in its
kernel (opposite to much of the NLS literature).

Orbital stability rests on: (i1) ker L_plus = span{Psi0} with the rest of the
spectrum positive; (i2) L_minus has exactly one negative eigenvalue; and the
Vakhitov-Kolokolov condition d/domega ||Psi0||^2 > 0, for which the closed
form (an incomplete-beta-type integral) is evaluated here.  For mu > 2 the
derivative changes sign exactly once in omega; ``find_omega_star`` brackets
that threshold.

Matrix facets: eigenvalues and inertia counts use the cell-weighted symmetric
matrices (diagonal congruence of the discrete form); pointwise residuals use
the flux-corrected application of :func:`starnls.core.apply_hamiltonian`; the
linearized flow uses the consistent-mass P1 pencil so the kernel direction
drifts only at O(h^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import (
    GraphField,
    StarGrid,
    VertexCoupling,
    apply_hamiltonian,
    cell_weight_vector,
    consistent_mass_matrix,
    derivative_matrix,
    derivative_weight_vector,
    dirichlet_form_matrix,
    simpson_weight_vector,
)
from .errors import (
    ConvergenceError,
    ExistenceBoundError,
    InvalidParameterError,
    NoSignChangeError,
)

__all__ = [
    "OperatorMatrix",
    "SpectralReport",
    "assemble_linearization",
    "assemble_hamiltonian",
    "lowest_eigenpairs",
    "quadratic_form_identity",
    "vk_derivative",
    "find_omega_star",
    "linearized_evolve",
    "LinearizedTrajectory",
]

LPLUS = "Lplus"
LMINUS = "Lminus"
HALPHA = "Halpha"


@dataclass
class OperatorMatrix:
    """Discretized self-adjoint operator -d^2/dx^2 + V with vertex coupling.

    ``symmetric`` is diag(sqrt(w)) A diag(1/sqrt(w)) for the cell weights w,
    exactly symmetric; eigenvectors of it map to fields by dividing by
    sqrt(w).  ``form_matrix`` is the congruent K + alpha e0 e0^T + diag(w V)
    whose inertia equals that of the operator.  ``apply`` is the pointwise
    second-order application used by residual oracles.
    """

    grid: StarGrid
    label: str
    coupling: VertexCoupling
    potential: np.ndarray  # nodal V, flat layout
    symmetric: sp.csr_matrix
    form_matrix: sp.csr_matrix
    weights: np.ndarray
    reference: Optional[GraphField] = None  # ground state used in assembly

    def apply(self, field: GraphField) -> GraphField:
        """(-psi'' + V psi) with O(h^2) max-norm consistency at every node."""
        out = apply_hamiltonian(field, self.coupling).as_vector()
        out += self.potential * field.as_vector()
        return GraphField.from_vector(self.grid, out)

    def quadratic_form(self, field: GraphField) -> float:
        """<L psi, psi> through the discrete energy form."""
        v = field.as_vector()
        return float(np.real(np.conj(v) @ (self.form_matrix @ v)))

    def dense_symmetric(self) -> np.ndarray:
        return self.symmetric.toarray()


@dataclass
class SpectralReport:
    lowest_eigenvalues: np.ndarray  # ascending
    negative_count: int
    kernel_candidate_overlap: float
    eigenfields: list  # GraphField per eigenvalue


def _assemble(grid, coupling, potential, label, reference=None) -> OperatorMatrix:
    w = cell_weight_vector(grid)
    k = dirichlet_form_matrix(grid).tolil()
    k[0, 0] += coupling.alpha
    form = (k.tocsr() + sp.diags(w * potential)).tocsr()
    d = np.sqrt(w)
    sym = sp.diags(1.0 / d) @ form @ sp.diags(1.0 / d)
    sym = ((sym + sym.T) * 0.5).tocsr()
    return OperatorMatrix(
        grid=grid,
        label=label,
        coupling=coupling,
        potential=np.asarray(potential, dtype=float),
        symmetric=sym,
        form_matrix=form,
        weights=w,
        reference=reference,
    )


def assemble_linearization(
    ground: GraphField,
    omega: float,
    mu: float,
    coupling: VertexCoupling,
    which: str,
) -> OperatorMatrix:
    """Assemble L_plus or L_minus at a real ground state."""
    if which not in (LPLUS, LMINUS):
        raise InvalidParameterError(f"which must be {LPLUS!r} or {LMINUS!r}")
    if not ground.is_real(tol=1e-10):
        raise InvalidParameterError("linearization requires a real-valued ground state")
    density = np.abs(ground.as_vector()) ** (2 * mu)
    factor = 1.0 if which == LPLUS else (2 * mu + 1.0)
    potential = omega - factor * density
    return _assemble(ground.grid, coupling, potential, which, reference=ground)


def assemble_hamiltonian(
    grid: StarGrid, coupling: VertexCoupling, omega: float = 0.0
) -> OperatorMatrix:
    """Discrete H_alpha (+ omega), i.e. the linearization at zero field."""
    potential = np.full(grid.size, float(omega))
    return _assemble(grid, coupling, potential, HALPHA)


def _ldl_negative_count(form_dense: np.ndarray) -> int:
    """Inertia by symmetric indefinite (Bunch-Kaufman) factorization."""
    _, d, _ = scipy.linalg.ldl(form_dense)
    count = 0
    i = 0
    n = d.shape[0]
    while i < n:
        if i + 1 < n and (d[i, i + 1] != 0.0 or d[i + 1, i] != 0.0):
            block = d[i : i + 2, i : i + 2]
            count += int(np.sum(np.linalg.eigvalsh(block) < 0))
            i += 2
        else:
            if d[i, i] < 0:
                count += 1
            i += 1
    return count


def lowest_eigenpairs(op: OperatorMatrix, k: int) -> SpectralReport:
    """k smallest eigenpairs (dense symmetric solver) plus the inertia count.

    The negative-eigenvalue count comes from an LDL^T factorization of the
    congruent form matrix, not from thresholding the computed eigenvalues.
    """
    if k < 1:
        raise InvalidParameterError("k must be at least 1")
    dense = op.dense_symmetric()
    try:
        vals, vecs = scipy.linalg.eigh(dense, subset_by_index=[0, k - 1])
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise ConvergenceError(f"symmetric eigensolver failed: {exc}") from exc
    negative = _ldl_negative_count(op.form_matrix.toarray())
    sqrt_w = np.sqrt(op.weights)
    fields = [GraphField.from_vector(op.grid, vecs[:, i] / sqrt_w) for i in range(k)]
    overlap = 0.0
    if op.reference is not None:
        gv = op.reference.as_vector().real
        u_ref = sqrt_w * gv
        u0 = vecs[:, 0]
        overlap = float(
            abs(u_ref @ u0) / (np.linalg.norm(u_ref) * np.linalg.norm(u0))
        )
    return SpectralReport(
        lowest_eigenvalues=vals,
        negative_count=negative,
        kernel_candidate_overlap=overlap,
        eigenfields=fields,
    )


def quadratic_form_identity(
    ground: GraphField,
    probe: GraphField,
    omega: float,
    mu: float,
    coupling: VertexCoupling,
) -> tuple[float, float]:
    """Both sides of <L_plus psi, psi> = sum_k int (Psi0)^2 |d/dx(psi/Psi0)|^2.

    Left: the discrete quadratic form of L_plus.  Right: quadrature of the
    weighted logarithmic-derivative integrand (the vertex boundary terms
    cancel against the alpha term in the continuum identity).
    """
    if not isinstance(probe, GraphField):
        raise InvalidParameterError("probe must be a GraphField (vertex continuity)")
    if not probe.is_real(tol=1e-10):
        raise InvalidParameterError("probe must be real-valued")
    if not ground.is_real(tol=1e-10):
        raise InvalidParameterError("ground state must be real-valued")
    gv = ground.as_vector().real
    if np.min(np.abs(gv)) == 0.0:
        raise InvalidParameterError("ground state vanishes at a node; ratio undefined")
    lplus = assemble_linearization(ground, omega, mu, coupling, LPLUS)
    lhs = lplus.quadratic_form(probe)

    ratio = probe.as_vector().real / gv
    dmat = derivative_matrix(ground.grid)
    dw = derivative_weight_vector(ground.grid)
    dratio = dmat @ ratio
    # (Psi0)^2 sampled at the same nodes as the derivative samples
    n, m = ground.grid.n_edges, ground.grid.points_per_edge
    g_edges = np.concatenate([ground.edge_values(kk).real for kk in range(n)])
    rhs = float(np.sum(dw * g_edges**2 * dratio**2))
    return lhs, rhs


def vk_derivative(alpha: float, omega: float, mu: float, n_edges: int) -> float:
    """Closed-form d/domega ||Psi0_omega||^2 for the attractive ground state.

    C [(1/mu - 1/2) int_q^1 (1-t^2)^(1/mu - 1) dt + (q/2)(1-q^2)^(1/mu - 1)]
    with q = |alpha| / (N sqrt(omega)) and C = N (mu+1)^(1/mu) / mu *
    omega^(1/mu - 3/2).  The integrable endpoint singularity for mu > 1 is
    removed by the substitution t = 1 - s^2.
    """
    if not alpha < 0:
        raise InvalidParameterError("the VK formula is for the attractive case alpha < 0")
    if not mu > 0:
        raise InvalidParameterError("mu must be positive")
    if not omega > alpha**2 / n_edges**2:
        raise ExistenceBoundError(
            f"omega = {omega} at or below the existence bound "
            f"alpha^2/N^2 = {alpha ** 2 / n_edges ** 2}"
        )
    q = abs(alpha) / (n_edges * math.sqrt(omega))
    c_exp = 1.0 / mu - 1.0

    def integrand(s):
        return 2.0 * s ** (2.0 / mu - 1.0) * (2.0 - s * s) ** c_exp

    upper = math.sqrt(1.0 - q)
    integral, _ = scipy.integrate.quad(
        integrand, 0.0, upper, epsabs=1e-13, epsrel=1e-12, limit=200
    )
    prefactor = n_edges * (mu + 1.0) ** (1.0 / mu) / mu * omega ** (1.0 / mu - 1.5)
    bracket = (1.0 / mu - 0.5) * integral + 0.5 * q * (1.0 - q * q) ** c_exp
    return prefactor * bracket


def find_omega_star(
    alpha: float, mu: float, n_edges: int, bracket_tolerance: float = 1e-8
) -> float:
    """Bisect the sign change of the VK derivative in omega (mu > 2 only).

    For mu <= 2 the derivative is positive on the whole existence range and
    NoSignChangeError is raised.
    """
    if not alpha < 0:
        raise InvalidParameterError("alpha must be negative")
    if mu <= 2:
        raise NoSignChangeError(
            f"for mu = {mu} <= 2 the mass derivative stays positive; no threshold"
        )
    bound = alpha**2 / n_edges**2
    lo = bound * (1.0 + 1e-9)
    if vk_derivative(alpha, lo, mu, n_edges) <= 0:
        raise NoSignChangeError("derivative not positive near the existence bound")
    hi = bound * 2.0
    for _ in range(200):
        if vk_derivative(alpha, hi, mu, n_edges) < 0:
            break
        hi *= 2.0
    else:  # pragma: no cover
        raise NoSignChangeError("no sign change found while expanding the bracket")
    while hi - lo > bracket_tolerance:
        mid = 0.5 * (lo + hi)
        if vk_derivative(alpha, mid, mu, n_edges) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class LinearizedTrajectory:
    times: np.ndarray
    quadratic_form: np.ndarray  # conserved <x, L x> of the canonical system
    eta_norm: np.ndarray
    rho_norm: np.ndarray
    rho_overlap: np.ndarray  # |<rho, Psi0>| / norms
    final_eta: GraphField
    final_rho: GraphField


def _weighted_mass_matrix(grid: StarGrid, v_nodal: np.ndarray, v_ghost: float) -> sp.csr_matrix:
    """P1 mass matrix weighted by the nodal potential (linear per element)."""
    n, m, h = grid.n_edges, grid.points_per_edge, grid.spacing
    rows, cols, vals = [], [], []

    def idx(k, i):
        return 0 if i == 0 else 1 + k * m + (i - 1)

    def add(r, c, val):
        rows.append(r)
        cols.append(c)
        vals.append(val)

    for k in range(n):
        for i in range(m + 1):
            a = idx(k, i)
            va = v_nodal[a]
            if i < m:
                b = idx(k, i + 1)
                vb = v_nodal[b]
            else:
                b = None
                vb = v_ghost
            # element [x_i, x_{i+1}] with linear weight
            add(a, a, h * (3.0 * va + vb) / 12.0)
            if b is not None:
                add(b, b, h * (va + 3.0 * vb) / 12.0)
                add(a, b, h * (va + vb) / 12.0)
                add(b, a, h * (va + vb) / 12.0)
    return sp.csr_matrix((vals, (rows, cols)), shape=(grid.size, grid.size))


def linearized_evolve(
    eta: GraphField,
    rho: GraphField,
    ground: GraphField,
    omega: float,
    mu: float,
    coupling: VertexCoupling,
    dt: float,
    t_final: float,
    observables_stride: int = 1,
):
    """Crank-Nicolson flow of the canonical system d/dt (eta, rho) = J L (eta, rho).

    Uses the consistent-mass P1 pencil per block; the midpoint rule conserves
    the indefinite quadratic form <eta, L_minus eta> + <rho, L_plus rho>
    exactly, which the trajectory records together with the component norms
    and the overlap of rho with the ground state (the kernel direction of
    L_plus).
    """
    if not (eta.is_real(1e-10) and rho.is_real(1e-10)):
        raise InvalidParameterError("eta and rho must be real fields")
    grid = ground.grid
    density = np.abs(ground.as_vector()) ** (2 * mu)
    k_alpha = dirichlet_form_matrix(grid).tolil()
    k_alpha[0, 0] += coupling.alpha
    k_alpha = k_alpha.tocsr()
    mass_c = consistent_mass_matrix(grid)
    # FEM potential terms: V = omega - c * |Psi0|^(2mu); ghost potential omega
    a_plus = k_alpha + _weighted_mass_matrix(grid, omega - density, omega)
    a_minus = k_alpha + _weighted_mass_matrix(
        grid, omega - (2 * mu + 1) * density, omega
    )

    size = grid.size
    zero = sp.csr_matrix((size, size))
    big_m = sp.bmat([[mass_c, zero], [zero, mass_c]], format="csr")
    j_l = sp.bmat([[zero, a_plus], [-a_minus, zero]], format="csr")
    solver = spla.splu((big_m - 0.5 * dt * j_l).tocsc())
    forward = (big_m + 0.5 * dt * j_l).tocsr()

    w = simpson_weight_vector(grid)
    gv = ground.as_vector().real

    def observables(x):
        e, r = x[:size], x[size:]
        form = float(e @ (a_minus @ e) + r @ (a_plus @ r))
        e_norm = float(np.sqrt(np.sum(w * e**2)))
        r_norm = float(np.sqrt(np.sum(w * r**2)))
        denom = r_norm * math.sqrt(float(np.sum(w * gv**2)))
        olap = float(abs(np.sum(w * r * gv)) / denom) if denom > 0 else 0.0
        return form, e_norm, r_norm, olap

    n_steps = int(round(t_final / abs(dt)))
    x = np.concatenate([eta.as_vector().real, rho.as_vector().real])
    times, forms, e_norms, r_norms, olaps = [0.0], [], [], [], []
    f0 = observables(x)
    forms.append(f0[0])
    e_norms.append(f0[1])
    r_norms.append(f0[2])
    olaps.append(f0[3])
    for step in range(1, n_steps + 1):
        x = solver.solve(forward @ x)
        if step % observables_stride == 0 or step == n_steps:
            f = observables(x)
            times.append(step * dt)
            forms.append(f[0])
            e_norms.append(f[1])
            r_norms.append(f[2])
            olaps.append(f[3])
    return LinearizedTrajectory(
        times=np.asarray(times),
        quadratic_form=np.asarray(forms),
        eta_norm=np.asarray(e_norms),
        rho_norm=np.asarray(r_norms),
        rho_overlap=np.asarray(olaps),
        final_eta=GraphField.from_vector(grid, x[:size]),
        final_rho=GraphField.from_vector(grid, x[size:]),
    )
