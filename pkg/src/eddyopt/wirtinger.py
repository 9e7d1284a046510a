"""Reduced cost, conjugate-gradient ("Wirtinger") form of the reduced
gradient, finite-difference validation, and BFGS minimization.

For the real-valued reduced cost j the directional derivative along a
control direction xi with real steps is

    d j(z; xi) = 2 Re(conj(xi)^T G),

and G (the conjugate Wirtinger derivative) is assembled from one adjoint
solve plus surface-matrix products: G = (T + alpha K z + beta M z) / 2
with T the adjoint pairing against each basis function. The direction of
steepest descent is -G. BFGS runs on the stacked real parametrization
(Re z, Im z), whose gradient is (2 Re G, 2 Im G).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .nedelec import assemble_curl_mass, assemble_load, integrate, _vector_field_at
from .solver import StateOperator
from .trace import SurfaceOperators, lift, _face_edge_tables, face_lambda_gradients


@dataclass
class CostReport:
    """Cost value and its parts: J = J1 + J2 + J3 with J1 the tracking
    misfit, J2 the surface-curl penalty, J3 the surface mass penalty."""

    J: float
    J1: float
    J2: float
    J3: float
    iteration: int = None
    grad_norm: float = None
    step: float = None


@dataclass
class ReducedGradient:
    """Conjugate Wirtinger derivative G and its three components
    (G = tracking + curl_part + mass_part)."""

    G: np.ndarray
    tracking: np.ndarray
    curl_part: np.ndarray
    mass_part: np.ndarray


def lifting_matrix(space):
    """Sparse matrix of the lifting: lift(space, z) == L @ z."""
    mesh = space.mesh
    n_ctrl = mesh.n_boundary_edges
    k = space.k
    rows = [(k + 1) * mesh.boundary_edges]
    cols = [np.arange(n_ctrl)]
    data = [np.ones(n_ctrl)]
    if k == 1:
        bidx, a, b, lengths, _ = _face_edge_tables(mesh)
        g = face_lambda_gradients(mesh.vertices[mesh.boundary_faces])
        gids = mesh.boundary_face_ids
        sv = mesh.vertices[mesh.faces[gids]]
        q = np.stack([sv[:, 1] - sv[:, 0], sv[:, 2] - sv[:, 0]], axis=1)
        f = np.arange(len(gids))
        for d in range(2):
            for i in range(3):
                grad_diff = g[f, b[:, i]] - g[f, a[:, i]]
                val = lengths[:, i] / 3.0 * np.einsum(
                    "fd,fd->f", q[:, d], grad_diff)
                rows.append(space.n_edge_dofs + 2 * gids + d)
                cols.append(bidx[:, i])
                data.append(val)
    return sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        (space.n_dofs, n_ctrl)).tocsr()


class ReducedProblem:
    """Bundles everything needed to evaluate j(z) and its gradient.

    One factorization is shared by all cost/gradient evaluations; each
    evaluation costs one state solve, plus one adjoint solve when the
    gradient is requested.
    """

    def __init__(self, mesh, space, config):
        self.mesh = mesh
        self.space = space
        self.config = config
        self.op = StateOperator(mesh, space, config)
        self.surf = SurfaceOperators.build(mesh)
        q_c = (config.quad_order if config.quad_order
               else 2 * space.k + 2) + 2
        _, self.M_c = assemble_curl_mass(mesh, space, 1.0, 1.0, q_c)
        self.d = assemble_load(mesh, space, config.u_d, q_c)
        if config.u_d is None:
            self.c_d = 0.0
        else:
            self.c_d = float(integrate(
                mesh,
                lambda p: np.einsum(
                    "...d,...d->...", _vector_field_at(config.u_d, p),
                    _vector_field_at(config.u_d, p).conj()).real,
                q_c))
        B = space.boundary_dofs
        self.L_B = lifting_matrix(space)[B]
        self.A_IB_H = self.op.A_IB.getH().tocsr()
        self.n_evaluations = 0

    @property
    def n_controls(self):
        return self.mesh.n_boundary_edges

    def _parts(self, z, u):
        J1 = 0.5 * (np.vdot(u, self.M_c @ u).real
                    - 2.0 * np.vdot(self.d, u).real + self.c_d)
        J2 = 0.5 * self.config.alpha * np.vdot(z, self.surf.K @ z).real
        J3 = 0.5 * self.config.beta * np.vdot(z, self.surf.M @ z).real
        return CostReport(J=J1 + J2 + J3, J1=J1, J2=J2, J3=J3)

    def cost(self, z):
        self.n_evaluations += 1
        return self._parts(z, self.op.solve_state(z))

    def gradient(self, z):
        return self.cost_and_gradient(z)[1]

    def cost_and_gradient(self, z):
        self.n_evaluations += 1
        z = np.asarray(z, dtype=complex)
        u = self.op.solve_state(z)
        report = self._parts(z, u)
        rho = self.M_c @ u - self.d
        w = self.op.solve_adjoint(rho)
        I, B = self.space.interior_dofs, self.space.boundary_dofs
        y = rho[B] - self.A_IB_H @ w[I]
        T = self.L_B.T @ y
        curl_part = 0.5 * self.config.alpha * (self.surf.K @ z)
        mass_part = 0.5 * self.config.beta * (self.surf.M @ z)
        grad = ReducedGradient(
            G=0.5 * T + curl_part + mass_part,
            tracking=0.5 * T, curl_part=curl_part, mass_part=mass_part)
        report.grad_norm = float(np.linalg.norm(grad.G))
        return report, grad


def reduced_cost(problem, z):
    return problem.cost(z)


def reduced_gradient(problem, z):
    return problem.gradient(z)


def steepest_descent_direction(G):
    """Direction of steepest descent for real step sizes: -G."""
    if isinstance(G, ReducedGradient):
        G = G.G
    return -np.asarray(G, dtype=complex)


def directional_derivative(G, xi):
    """d j(z; xi) = 2 Re(conj(xi)^T G)."""
    if isinstance(G, ReducedGradient):
        G = G.G
    return 2.0 * np.vdot(xi, G).real


def _as_value_grad(fun):
    def wrapped(z):
        out = fun(z)
        f, G = out
        if isinstance(f, CostReport):
            return f.J, np.asarray(G.G if isinstance(G, ReducedGradient)
                                   else G, dtype=complex), f
        return float(f), np.asarray(G, dtype=complex), None
    return wrapped


def fd_check(fun, z, xi, t_list=None, cost_fn=None):
    """Forward-difference consistency table for the derivative at z.

    fun(z) -> (cost, gradient); returns rows (t, |d - quotient|) with
    d = 2 Re(conj(xi)^T G). Perturbed points only need cost values, so a
    cheaper cost_fn(z) -> float may be supplied for them.
    """
    vg = _as_value_grad(fun)
    if t_list is None:
        t_list = np.logspace(-1, -9, 17)
    z = np.asarray(z, dtype=complex)
    xi = np.asarray(xi, dtype=complex)
    f0, G, _ = vg(z)
    d = 2.0 * np.vdot(xi, G).real
    if cost_fn is None:
        def cost_fn(zz):
            return vg(zz)[0]
    rows = []
    for t in t_list:
        ft = cost_fn(z + t * xi)
        if isinstance(ft, CostReport):
            ft = ft.J
        rows.append((float(t), abs(d - (ft - f0) / t)))
    return rows


def loglog_slope(x, y):
    """Least-squares slope of log y against log x."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def _strong_wolfe(phi, f0, df0, c1, c2, a_first=1.0, max_evals=25):
    """Strong Wolfe line search; phi(a) -> (f, df). Returns accepted a."""

    def zoom(a_lo, f_lo, df_lo, a_hi, f_hi):
        for _ in range(max_evals):
            # quadratic interpolation with bisection fallback
            denom = f_hi - f_lo - df_lo * (a_hi - a_lo)
            if abs(denom) > 1e-30:
                a = a_lo - 0.5 * df_lo * (a_hi - a_lo) ** 2 / denom
            else:
                a = 0.5 * (a_lo + a_hi)
            lo, hi = min(a_lo, a_hi), max(a_lo, a_hi)
            if not (lo + 0.1 * (hi - lo) <= a <= hi - 0.1 * (hi - lo)):
                a = 0.5 * (a_lo + a_hi)
            f, df = phi(a)
            if f > f0 + c1 * a * df0 or f >= f_lo:
                a_hi, f_hi = a, f
            else:
                if abs(df) <= -c2 * df0:
                    return a
                if df * (a_hi - a_lo) >= 0:
                    a_hi, f_hi = a_lo, f_lo
                a_lo, f_lo, df_lo = a, f, df
            if abs(a_hi - a_lo) < 1e-16 * max(1.0, abs(a_lo)):
                return a_lo
        return a_lo

    a_prev, f_prev, df_prev = 0.0, f0, df0
    a = a_first
    for i in range(max_evals):
        f, df = phi(a)
        if f > f0 + c1 * a * df0 or (i > 0 and f >= f_prev):
            return zoom(a_prev, f_prev, df_prev, a, f)
        if abs(df) <= -c2 * df0:
            return a
        if df >= 0:
            return zoom(a, f, df, a_prev, f_prev)
        a_prev, f_prev, df_prev = a, f, df
        a *= 2.0
    return a


def bfgs_minimize(fun, z0, tol=1e-9, max_iter=500, c1=1e-4, c2=0.9):
    """Minimize a real cost of a complex vector via BFGS.

    fun(z) -> (cost, gradient) where cost may be a CostReport and gradient
    a ReducedGradient or plain complex array. Iterates on the stacked real
    coordinates (Re z, Im z); terminates when the complex gradient norm
    ||G|| drops to tol. Returns (z, history of CostReports).
    """
    vg = _as_value_grad(fun)
    z0 = np.asarray(z0, dtype=complex)
    n = z0.size

    def pack(z):
        return np.concatenate([z.real, z.imag])

    def unpack(x):
        return x[:n] + 1j * x[n:]

    cache = {}

    def eval_at(x):
        key = x.tobytes()
        if key not in cache:
            f, G, rep = vg(unpack(x))
            g = np.concatenate([2.0 * G.real, 2.0 * G.imag])
            cache.clear()
            cache[key] = (f, g, G, rep)
        return cache[key]

    x = pack(z0)
    f, g, G, rep = eval_at(x)
    history = []

    def record(i, step):
        r = rep if rep is not None else CostReport(
            J=f, J1=f, J2=0.0, J3=0.0)
        r.iteration = i
        r.grad_norm = float(np.linalg.norm(G))
        r.step = step
        history.append(r)

    record(0, None)
    H = np.eye(2 * n)
    scaled = False
    for it in range(1, max_iter + 1):
        gnorm = np.linalg.norm(G)
        if gnorm <= tol:
            break
        p = -H @ g
        dphi0 = float(g @ p)
        if dphi0 >= 0.0:
            # fall back to steepest descent when the model direction fails
            H = np.eye(2 * n)
            scaled = False
            p = -g
            dphi0 = float(g @ p)

        def phi(a):
            fa, ga, _, _ = eval_at(x + a * p)
            return fa, float(ga @ p)

        a = _strong_wolfe(phi, f, dphi0, c1, c2)
        x_new = x + a * p
        f_new, g_new, G_new, rep_new = eval_at(x_new)
        s, y = x_new - x, g_new - g
        sy = float(s @ y)
        if sy > 1e-14 * np.linalg.norm(s) * np.linalg.norm(y):
            if not scaled:
                H = (sy / float(y @ y)) * np.eye(2 * n)
                scaled = True
            rho_ = 1.0 / sy
            Hy = H @ y
            H = (H - rho_ * (np.outer(s, Hy) + np.outer(Hy, s))
                 + rho_ * (rho_ * float(y @ Hy) + 1.0) * np.outer(s, s))
        x, f, g, G, rep = x_new, f_new, g_new, G_new, rep_new
        record(it, a)
        if np.linalg.norm(G) <= tol:
            break
    return unpack(x), history
