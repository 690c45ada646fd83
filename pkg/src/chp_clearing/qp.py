"""Dense primal-dual interior-point solver for convex quadratic programs

    minimize    0.5 x'Qx + c'x
    subject to  A x  = b     (multipliers y, free)
                G x <= h     (multipliers z >= 0)

Stationarity is Qx + c + A'y + G'z = 0. Rows are scaled to unit infinity
norm before solving and multipliers are returned in the caller's scaling.

Inequality rows that come in exact opposite pairs (g'x <= h, -g'x <= -h) are
solved as one equality; its multiplier nu is split back as z = (max(nu, 0),
max(-nu, 0)), which is the unique split with one side zero.

After convergence the solution is polished: the active set is read off the
interior point and the equality-constrained KKT system on that set is solved
directly. The polished point is kept only if it is primal and dual feasible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
MAX_ITER = "max_iterations"
DIVERGED = "diverged"


@dataclass
class QPResult:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    status: str
    iterations: int
    polished: bool = False
    residuals: dict = field(default_factory=dict)
    slack: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def objective(self, q, c) -> float:
        return float(0.5 * self.x @ q @ self.x + c @ self.x)


def kkt_residuals(q, c, a, b, g, h, x, y, z) -> dict:
    """Infinity-norm KKT residuals on a problem whose rows are already scaled."""
    rd = q @ x + c + a.T @ y + g.T @ z
    scale_d = 1.0 + max(np.abs(c).max(initial=0.0), np.abs(q @ x).max(initial=0.0))
    slack = h - g @ x
    return {
        "stationarity": float(np.abs(rd).max(initial=0.0) / scale_d),
        "equality": float(np.abs(a @ x - b).max(initial=0.0)),
        "inequality": float(max(0.0, -slack.min(initial=0.0))),
        "dual_sign": float(max(0.0, -z.min(initial=0.0))),
        "complementarity": float(np.abs(z * slack).max(initial=0.0)),
    }


def _row_scale(m: np.ndarray) -> np.ndarray:
    norms = np.abs(m).max(axis=1) if m.size else np.zeros(m.shape[0])
    return np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)


def _opposite_pairs(g: np.ndarray, h: np.ndarray) -> list[tuple[int, int]]:
    """Pairs (i, j), i < j, with row j == -row i and h_j == -h_i (exactly)."""
    if g.shape[0] < 2:
        return []
    pairs, used = [], set()
    keys = {}
    for i in range(g.shape[0]):
        keys.setdefault((g[i].tobytes(), float(h[i])), []).append(i)
    for i in range(g.shape[0]):
        if i in used:
            continue
        neg = (-g[i] + 0.0).tobytes(), float(-h[i]) + 0.0
        for j in keys.get(neg, []):
            if j > i and j not in used:
                pairs.append((i, j))
                used.update((i, j))
                break
    return pairs


class _KKTPattern:
    """Reduced KKT matrix [[Q + G'WG + reg I, A'], [A, -reg I]] with a fixed
    sparsity pattern; each iteration only refills the values for a new W."""

    def __init__(self, q, a, g, reg):
        n, me = q.shape[0], a.shape[0]
        self.n, self.size = n, n + me
        rows, cols, vals = [], [], []

        def add(r, c, v):
            rows.append(np.asarray(r, dtype=np.int64).ravel())
            cols.append(np.asarray(c, dtype=np.int64).ravel())
            vals.append(np.asarray(v, dtype=float).ravel())

        qi, qj = np.nonzero(q)
        add(qi, qj, q[qi, qj])
        add(np.arange(n), np.arange(n), np.full(n, reg))
        ai, aj = np.nonzero(a)
        add(aj, n + ai, a[ai, aj])
        add(n + ai, aj, a[ai, aj])
        add(n + np.arange(me), n + np.arange(me), np.full(me, -reg))
        n_base = sum(len(r) for r in rows)
        # every pair of nonzeros sharing a row of G contributes to G'WG
        nzr, nzc = np.nonzero(g)
        gv = g[nzr, nzc]
        counts = np.bincount(nzr, minlength=g.shape[0])
        starts = np.cumsum(counts) - counts
        rep = counts[nzr]
        first = np.repeat(np.arange(nzr.size), rep)
        offset = np.arange(first.size) - np.repeat(np.cumsum(rep) - rep, rep)
        second = starts[nzr[first]] + offset
        add(nzc[first], nzc[second], np.zeros(first.size))
        r_all, c_all = np.concatenate(rows), np.concatenate(cols)
        keys = c_all * self.size + r_all
        uniq, pos = np.unique(keys, return_inverse=True)
        self.indices = (uniq % self.size).astype(np.int32)
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(uniq // self.size, minlength=self.size))]).astype(np.int32)
        self.nnz = uniq.size
        self.base = np.bincount(pos[:n_base], weights=np.concatenate(vals)[:n_base], minlength=self.nnz)
        self.g_pos = pos[n_base:]
        self.g_row = nzr[first]
        self.g_prod = gv[first] * gv[second]

    def factor(self, w) -> "_Newton":
        data = self.base + np.bincount(self.g_pos, weights=self.g_prod * w[self.g_row], minlength=self.nnz)
        k = sp.csc_matrix((data, self.indices, self.indptr), shape=(self.size, self.size))
        return _Newton(self.n, spla.splu(k))


class _Newton:
    def __init__(self, n, lu):
        self.n = n
        self.lu = lu

    def solve(self, r1, r2):
        sol = self.lu.solve(np.concatenate([r1, r2]))
        return sol[: self.n], sol[self.n:]


def _ipm(q, c, a, b, g, h, tol, max_iter):
    n, me, mi = q.shape[0], a.shape[0], g.shape[0]
    x = np.zeros(n)
    y = np.zeros(me)
    s = np.maximum(h - g @ x, 1.0) if mi else np.zeros(0)
    z = np.ones(mi)
    nb, nh, nc = 1 + np.abs(b).max(initial=0), 1 + np.abs(h).max(initial=0), 1 + np.abs(c).max(initial=0)
    status = MAX_ITER
    reg = 1e-11
    pattern = _KKTPattern(q, a, g, reg)
    it = 0
    for it in range(1, max_iter + 1):
        rd = q @ x + c + a.T @ y + g.T @ z
        rp = a @ x - b
        rg = g @ x + s - h
        mu = float(s @ z / mi) if mi else 0.0
        if (np.abs(rd).max(initial=0) <= tol * nc and np.abs(rp).max(initial=0) <= tol * nb
                and np.abs(rg).max(initial=0) <= tol * nh and mu <= tol):
            status = OPTIMAL
            break
        if np.abs(x).max(initial=0) > 1e12 or (mi and z.max() > 1e14):
            status = DIVERGED
            break
        w = z / s if mi else np.zeros(0)
        try:
            kkt = pattern.factor(w)
        except (np.linalg.LinAlgError, ValueError, RuntimeError):
            status = DIVERGED
            break

        def direction(rc):
            # rc: target for s*z; returns dx, dy, ds, dz
            t = (-rc + z * rg) / s if mi else np.zeros(0)
            dx, dy = kkt.solve(-rd - g.T @ t, -rp)
            ds = -rg - g @ dx
            dz = (-rc - z * ds) / s if mi else np.zeros(0)
            return dx, dy, ds, dz

        dx, dy, ds, dz = direction(s * z)
        if mi:
            a_aff = min(_step(s, ds), _step(z, dz))
            mu_aff = float((s + a_aff * ds) @ (z + a_aff * dz) / mi)
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            dx, dy, ds, dz = direction(s * z + ds * dz - sigma * mu)
            alpha = min(1.0, 0.99 * min(_step(s, ds), _step(z, dz)))
        else:
            alpha = 1.0
        x += alpha * dx
        y += alpha * dy
        s += alpha * ds
        z += alpha * dz
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            status = DIVERGED
            break
    return x, y, s, z, status, it


def _step(v, dv) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _polish(q, c, a, b, g, h, x, y, z, s):
    """Solve the KKT system on the active set read from an interior point."""
    n = q.shape[0]
    act = np.flatnonzero(z > s) if g.shape[0] else np.zeros(0, dtype=int)
    ga = g[act]
    cons = np.vstack([a, ga])
    m = cons.shape[0]
    if m and np.linalg.matrix_rank(cons) < m:
        return None
    k = np.zeros((n + m, n + m))
    k[:n, :n] = q
    k[:n, n:] = cons.T
    k[n:, :n] = cons
    rhs = np.concatenate([-c, b, h[act]])
    try:
        sol = np.linalg.solve(k, rhs)
    except np.linalg.LinAlgError:
        return None
    xp = sol[:n]
    yp = sol[n: n + a.shape[0]]
    zp = np.zeros(g.shape[0])
    zp[act] = sol[n + a.shape[0]:]
    if not np.all(np.isfinite(sol)):
        return None
    return xp, yp, zp


def solve_qp(q, c, a=None, b=None, g=None, h=None, *, tol: float = 1e-10, max_iter: int = 100,
             polish: bool = True) -> QPResult:
    q = np.asarray(q, dtype=float)
    c = np.asarray(c, dtype=float)
    n = c.size
    a = np.zeros((0, n)) if a is None else np.asarray(a, dtype=float).reshape(-1, n)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float)
    g = np.zeros((0, n)) if g is None else np.asarray(g, dtype=float).reshape(-1, n)
    h = np.zeros(0) if h is None else np.asarray(h, dtype=float)

    # objective and row scaling
    obj_scale = 1.0 / max(1.0, np.abs(c).max(initial=0.0), np.abs(q).max(initial=0.0))
    ra, rg = _row_scale(a), _row_scale(g)
    qs, cs = q * obj_scale, c * obj_scale
    as_, bs = a * ra[:, None], b * ra
    gs, hs = g * rg[:, None], h * rg

    pairs = _opposite_pairs(gs, hs)
    paired = {i for p in pairs for i in p}
    keep = np.array([i for i in range(gs.shape[0]) if i not in paired], dtype=int)
    first = np.array([i for i, _ in pairs], dtype=int)
    a_all = np.vstack([as_, gs[first]]) if pairs else as_
    b_all = np.concatenate([bs, hs[first]]) if pairs else bs
    g_in, h_in = gs[keep], hs[keep]

    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):  # non-finite iterates end as DIVERGED
        x, y, s, z, status, it = _ipm(qs, cs, a_all, b_all, g_in, h_in, tol, max_iter)

    polished = False
    if status == OPTIMAL and polish:
        p = _polish(qs, cs, a_all, b_all, g_in, h_in, x, y, z, s)
        if p is not None:
            xp, yp, zp = p
            slack = h_in - g_in @ xp
            feas_tol = 1e-9 * (1 + np.abs(h_in).max(initial=0))
            if (zp.min(initial=0.0) >= -1e-9 and slack.min(initial=0.0) >= -feas_tol
                    and np.abs(a_all @ xp - b_all).max(initial=0.0) <= feas_tol):
                before = kkt_residuals(qs, cs, a_all, b_all, g_in, h_in, x, y, z)
                after = kkt_residuals(qs, cs, a_all, b_all, g_in, h_in, xp, yp, np.maximum(zp, 0.0))
                if max(after.values()) <= max(max(before.values()), 1e-12):
                    x, y, z = xp, yp, np.maximum(zp, 0.0)
                    polished = True
    if not polished and status == OPTIMAL:
        z = np.where(z > s, z, np.where(z < 1e-12, 0.0, z))

    # unmerge and unscale
    y_full = y[: a.shape[0]] * ra / obj_scale
    z_full = np.zeros(g.shape[0])
    z_full[keep] = z
    nu = y[a.shape[0]:]
    for (i, j), v in zip(pairs, nu):
        z_full[i] = max(v, 0.0)
        z_full[j] = max(-v, 0.0)
    z_full = z_full * rg / obj_scale

    residuals = kkt_residuals(qs, cs, as_, bs, gs, hs, x, y_full * obj_scale / ra,
                              z_full * obj_scale / rg)
    res = QPResult(x=x, y=y_full, z=z_full, status=status, iterations=it, polished=polished,
                   residuals=residuals, slack=h - g @ x)
    log.debug("qp: status=%s iterations=%d polished=%s residuals=%s", status, it, polished, res.residuals)
    return res
