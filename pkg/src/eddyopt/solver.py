"""Direct solves for the state and adjoint systems.

The system matrix is assembled once per mesh, the interior block is LU
factorized once, and every state solve (Dirichlet data by block
elimination), adjoint solve (conjugate-transpose triangular solves on the
same factors), and adjoint action reuses that factorization.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .nedelec import assemble, assemble_load
from .trace import lift


class SolverError(RuntimeError):
    pass


@dataclass
class AdjointState:
    """Adjoint solution w (zero on boundary dofs) and the residual moments
    rho it was solved against."""

    w: np.ndarray
    rho: np.ndarray


class StateOperator:
    """Factorized solver for one mesh/space/config triple.

    Solve counts are instrumented: n_factorizations, n_state_solves,
    n_adjoint_solves.
    """

    def __init__(self, mesh, space, config):
        self.mesh = mesh
        self.space = space
        self.config = config
        self.A = assemble(mesh, space, config)
        I, B = space.interior_dofs, space.boundary_dofs
        acsc = self.A.tocsc()
        self.A_II = acsc[I][:, I].tocsc()
        self.A_IB = acsc[I][:, B].tocsr()
        try:
            self.lu = spla.splu(self.A_II)
        except RuntimeError as err:
            raise SolverError(f"singular interior block: {err}") from None
        self.n_factorizations = 1
        self.n_state_solves = 0
        self.n_adjoint_solves = 0
        self.load = assemble_load(mesh, space, config.j_c)

    def _check_residual(self, rhs, sol):
        res = self.A_II @ sol - rhs
        denom = max(np.linalg.norm(rhs), 1e-300)
        rel = np.linalg.norm(res) / denom
        if rel > max(self.config.solver_tol, 1e-30) and denom > 1e-200:
            raise SolverError(f"relative residual {rel:.3e} above tolerance")

    def solve_dirichlet(self, g, f=None):
        """Solve with prescribed boundary dofs g (only B entries used)."""
        I, B = self.space.interior_dofs, self.space.boundary_dofs
        f = self.load if f is None else f
        rhs = f[I] - self.A_IB @ np.asarray(g, dtype=complex)[B]
        u = np.zeros(self.space.n_dofs, dtype=complex)
        sol = self.lu.solve(rhs)
        self._check_residual(rhs, sol)
        self.n_state_solves += 1
        u[I] = sol
        u[B] = np.asarray(g, dtype=complex)[B]
        return u

    def solve_state(self, z, j_c=None):
        """State solution with control z; u = lifting(z) + interior part."""
        f = self.load if j_c is None else assemble_load(
            self.mesh, self.space, j_c)
        return self.solve_dirichlet(lift(self.space, z), f)

    def solve_adjoint(self, rho):
        """Solve the conjugate-transposed interior system against rho."""
        I = self.space.interior_dofs
        w = np.zeros(self.space.n_dofs, dtype=complex)
        sol = self.lu.solve(np.asarray(rho, dtype=complex)[I], trans="H")
        res = self.A_II.getH() @ sol - rho[I]
        denom = max(np.linalg.norm(rho[I]), 1e-300)
        if np.linalg.norm(res) / denom > max(self.config.solver_tol, 1e-30) \
                and denom > 1e-200:
            raise SolverError("adjoint residual above tolerance")
        self.n_adjoint_solves += 1
        w[I] = sol
        return w

    def adjoint_action(self, w, rho, xi):
        """Duality pairing of the adjoint against a control direction xi.

        Equals the tracking pairing (rho, S xi) without an extra volume
        solve: only the boundary-coupled rows of the matrix are touched.
        """
        if isinstance(w, AdjointState):
            w = w.w
        I, B = self.space.interior_dofs, self.space.boundary_dofs
        v_B = lift(self.space, xi)[B]
        a_vw = np.vdot(w[I], self.A_IB @ v_B)
        pairing = np.vdot(v_B, rho[B])
        return -np.conj(a_vw) + pairing


def solve_state(op, z, j_c=None):
    return op.solve_state(z, j_c)


def solve_adjoint(op, rho):
    return AdjointState(w=op.solve_adjoint(rho), rho=np.asarray(rho))


def adjoint_action(op, w, rho, xi):
    return op.adjoint_action(w, rho, xi)
