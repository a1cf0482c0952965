"""Interior-point solver for the block conic programs.

The method is a primal-dual path follower on the homogeneous self-dual
embedding, so genuinely infeasible or unbounded programs terminate with a
certificate instead of diverging.  Semidefinite blocks are handled in a
realified (real symmetric) coordinate system with Nesterov-Todd scaling;
search directions come from a Mehrotra predictor-corrector step, reduced to
one factorization of the Schur complement bordered by the free columns.

Only dense linear algebra is used; problem sizes here stay in the
hundreds-of-rows, side <= 64 regime for which this is the right trade.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve, solve_triangular

from .program import FREE, HERM_PSD, NONNEG, ConicProgram, derealify, realify

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"


class SolverError(RuntimeError):
    """Raised by callers that need an optimal solve and did not get one."""

    def __init__(self, message: str, status: str):
        super().__init__(message)
        self.status = status

_STEP_BACKOFF = 0.99
_STALL_ALPHA = 1e-9


@dataclass
class ConicSolution:
    """Result of a solve: objective values, status, and per-block variables."""

    status: str
    primal_value: float | None
    dual_value: float | None
    gap: float | None
    blocks: dict[str, np.ndarray]
    iterations: int
    primal_residual: float
    dual_residual: float
    y: np.ndarray | None = None


@dataclass
class _PsdCone:
    name: str
    side_c: int
    side: int
    rows: np.ndarray
    coefs: np.ndarray  # (r, side, side), already realified and halved
    flat: np.ndarray  # (r, side*side) view for Schur assembly
    cobj: np.ndarray  # (side, side)
    all_rows: bool


@dataclass
class _Assembled:
    psd: list[_PsdCone]
    a_nn: np.ndarray  # (m, p) nonnegative columns, slacks included
    c_nn: np.ndarray
    a_f: np.ndarray  # (m, f) free columns
    c_f: np.ndarray
    b: np.ndarray
    nonneg_spans: list[tuple[str, int, int]]
    free_spans: list[tuple[str, int, int]]
    sign: float  # +1 for min programs, -1 when a max program was negated


def _assemble(prog: ConicProgram) -> _Assembled:
    m = len(prog.rows)
    psd_blocks = [blk for blk in prog.blocks if blk.kind == HERM_PSD]
    nn_blocks = [blk for blk in prog.blocks if blk.kind == NONNEG]
    fr_blocks = [blk for blk in prog.blocks if blk.kind == FREE]

    n_slack = sum(1 for row in prog.rows if row.relation != "==")
    p = sum(blk.size for blk in nn_blocks) + n_slack
    f = sum(blk.size for blk in fr_blocks)

    nonneg_spans: list[tuple[str, int, int]] = []
    off = 0
    nn_offset = {}
    for blk in nn_blocks:
        nonneg_spans.append((blk.name, off, blk.size))
        nn_offset[blk.name] = off
        off += blk.size
    slack_base = off

    free_spans: list[tuple[str, int, int]] = []
    off = 0
    fr_offset = {}
    for blk in fr_blocks:
        free_spans.append((blk.name, off, blk.size))
        fr_offset[blk.name] = off
        off += blk.size

    a_nn = np.zeros((m, p))
    a_f = np.zeros((m, f))
    b = np.zeros(m)
    psd_rows: dict[str, list[tuple[int, np.ndarray]]] = {blk.name: [] for blk in psd_blocks}

    slack_at = slack_base
    for i, row in enumerate(prog.rows):
        b[i] = row.rhs
        for name, coeff in row.terms.items():
            kind = prog._by_name[name].kind
            if kind == HERM_PSD:
                psd_rows[name].append((i, 0.5 * realify(coeff)))
            elif kind == NONNEG:
                o = nn_offset[name]
                a_nn[i, o : o + coeff.size] = coeff
            else:
                o = fr_offset[name]
                a_f[i, o : o + coeff.size] = coeff
        if row.relation == "<=":
            a_nn[i, slack_at] = 1.0
            slack_at += 1
        elif row.relation == ">=":
            a_nn[i, slack_at] = -1.0
            slack_at += 1

    sign = 1.0 if prog.sense == "min" else -1.0
    c_nn = np.zeros(p)
    c_f = np.zeros(f)
    psd_cobj: dict[str, np.ndarray] = {}
    for name, coeff in prog.objective.items():
        kind = prog._by_name[name].kind
        if kind == HERM_PSD:
            psd_cobj[name] = sign * 0.5 * realify(coeff)
        elif kind == NONNEG:
            o = nn_offset[name]
            c_nn[o : o + coeff.size] = sign * coeff
        else:
            o = fr_offset[name]
            c_f[o : o + coeff.size] = sign * coeff

    psd: list[_PsdCone] = []
    for blk in psd_blocks:
        side = 2 * blk.size
        entries = psd_rows[blk.name]
        rows = np.array([i for i, _ in entries], dtype=np.intp)
        coefs = (
            np.stack([c for _, c in entries])
            if entries
            else np.zeros((0, side, side))
        )
        cobj = psd_cobj.get(blk.name, np.zeros((side, side)))
        psd.append(
            _PsdCone(
                name=blk.name,
                side_c=blk.size,
                side=side,
                rows=rows,
                coefs=coefs,
                flat=coefs.reshape(len(entries), side * side),
                cobj=cobj,
                all_rows=len(entries) == m,
            )
        )

    return _Assembled(psd, a_nn, c_nn, a_f, c_f, b, nonneg_spans, free_spans, sign)


def _chol(mat: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        side = mat.shape[0]
        jitter = max(1e-14, 1e-12 * abs(np.trace(mat)) / side)
        return np.linalg.cholesky(mat + jitter * np.eye(side))


def _nt_scaling(x: np.ndarray, s: np.ndarray):
    """NT scaling point for one PSD block: returns (R, Rinv, lam, w).

    R'SR = Rinv X Rinv' = diag(lam) and w = R R' satisfies w s w = x.
    """
    lx = _chol(x)
    ls = _chol(s)
    u, sig, vt = np.linalg.svd(ls.T @ lx)
    isq = 1.0 / np.sqrt(sig)
    r = (lx @ vt.T) * isq[None, :]
    rinv = (u * isq[None, :]).T @ ls.T
    w = r @ r.T
    return r, rinv, sig, w, lx, ls


def _psd_max_step(l_chol: np.ndarray, delta: np.ndarray) -> float:
    """Largest t with X + t*delta PSD, where l_chol is a Cholesky factor of X."""
    t1 = solve_triangular(l_chol, delta, lower=True)
    t2 = solve_triangular(l_chol, t1.T, lower=True)
    lmin = float(np.linalg.eigvalsh(0.5 * (t2 + t2.T))[0])
    if lmin >= -1e-300:
        return np.inf
    return -1.0 / lmin


def _vec_max_step(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


class _Direction:
    __slots__ = ("dX", "dS", "dxn", "dsn", "dxf", "dy", "dtau", "dkap", "ok")

    def __init__(self, dX, dS, dxn, dsn, dxf, dy, dtau, dkap, ok=True):
        self.dX, self.dS = dX, dS
        self.dxn, self.dsn = dxn, dsn
        self.dxf, self.dy = dxf, dy
        self.dtau, self.dkap = dtau, dkap
        self.ok = ok


def solve(
    prog: ConicProgram,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-8,
    max_iter: int = 200,
    use_corrector: bool = True,
    verbose: bool = False,
) -> ConicSolution:
    """Solve a :class:`ConicProgram` to the requested tolerances.

    Status ``optimal`` guarantees the relative primal/dual equality residuals
    are at most ``feas_tol`` and |primal - dual| <= gap_tol * (1 + |primal|).
    ``infeasible``/``unbounded`` report an approximate Farkas certificate at
    the same tolerance; ``max_iter`` returns the best iterate seen.
    """
    data = _assemble(prog)
    psd, a_nn, c_nn, a_f, c_f, b = data.psd, data.a_nn, data.c_nn, data.a_f, data.c_f, data.b
    m = b.size
    p = c_nn.size
    f = c_f.size
    have_nn = p > 0
    have_f = f > 0

    nu = sum(cone.side for cone in psd) + p
    normb = float(np.linalg.norm(b))
    normc = float(
        np.sqrt(
            sum(np.linalg.norm(cone.cobj) ** 2 for cone in psd)
            + np.linalg.norm(c_nn) ** 2
            + np.linalg.norm(c_f) ** 2
        )
    )

    # state
    X = [np.eye(cone.side) for cone in psd]
    Sm = [np.eye(cone.side) for cone in psd]
    xn = np.ones(p)
    sn = np.ones(p)
    xf = np.zeros(f)
    y = np.zeros(m)
    tau = 1.0
    kap = 1.0

    def apply_cones(mats, vn) -> np.ndarray:
        out = np.zeros(m)
        for j, cone in enumerate(psd):
            if cone.rows.size:
                vals = np.tensordot(cone.coefs, mats[j], axes=([1, 2], [0, 1]))
                if cone.all_rows:
                    out += vals
                else:
                    out[cone.rows] += vals
        if have_nn:
            out += a_nn @ vn
        return out

    def apply_a(mats, vn, vf) -> np.ndarray:
        out = apply_cones(mats, vn)
        if have_f:
            out += a_f @ vf
        return out

    def apply_at(vec) -> list[np.ndarray]:
        outs = []
        for cone in psd:
            if cone.rows.size:
                yv = vec if cone.all_rows else vec[cone.rows]
                outs.append(np.tensordot(yv, cone.coefs, axes=(0, 0)))
            else:
                outs.append(np.zeros((cone.side, cone.side)))
        return outs

    def c_dot(mats, vn) -> float:
        total = 0.0
        for j, cone in enumerate(psd):
            total += float(np.tensordot(cone.cobj, mats[j], axes=([0, 1], [0, 1])))
        if have_nn:
            total += float(c_nn @ vn)
        return total

    def extract(status, Xc, xnc, xfc, yc, tauc, pres, dres, iters, pvalue, dvalue):
        blocks: dict[str, np.ndarray] = {}
        for j, cone in enumerate(psd):
            blocks[cone.name] = derealify(Xc[j] / tauc)
        for name, off, ln in data.nonneg_spans:
            blocks[name] = np.array(xnc[off : off + ln] / tauc)
        for name, off, ln in data.free_spans:
            blocks[name] = np.array(xfc[off : off + ln] / tauc)
        gap = abs(pvalue - dvalue)
        return ConicSolution(
            status=status,
            primal_value=data.sign * pvalue,
            dual_value=data.sign * dvalue,
            gap=gap,
            blocks=blocks,
            iterations=iters,
            primal_residual=pres,
            dual_residual=dres,
            y=yc / tauc,
        )

    best = None  # (score, args for extract)
    status = MAX_ITER
    it = 0

    for it in range(1, max_iter + 1):
        # residuals of the self-dual system
        at_y = apply_at(y)
        ax = apply_a(X, xn, xf)
        rp = ax - b * tau
        rdc = [-at_y[j] + psd[j].cobj * tau - Sm[j] for j in range(len(psd))]
        rdn = (-(a_nn.T @ y) + c_nn * tau - sn) if have_nn else np.zeros(0)
        rdf = (-(a_f.T @ y) + c_f * tau) if have_f else np.zeros(0)
        cx = c_dot(X, xn) + (float(c_f @ xf) if have_f else 0.0)
        by = float(b @ y)
        rg = cx - by + kap
        compl = sum(float(np.tensordot(X[j], Sm[j], axes=([0, 1], [0, 1]))) for j in range(len(psd)))
        if have_nn:
            compl += float(xn @ sn)
        mu = (compl + tau * kap) / (nu + 1)

        pres = float(np.linalg.norm(rp)) / tau / (1.0 + normb)
        dres_sq = sum(float(np.linalg.norm(r) ** 2) for r in rdc)
        if have_nn:
            dres_sq += float(rdn @ rdn)
        if have_f:
            dres_sq += float(rdf @ rdf)
        dres = float(np.sqrt(dres_sq)) / tau / (1.0 + normc)
        pobj = cx / tau
        dobj = by / tau

        if verbose:
            print(
                f"  it {it:3d}  mu={mu:9.3e}  pres={pres:9.3e}  dres={dres:9.3e}  "
                f"gap={abs(pobj - dobj):9.3e}  tau={tau:8.3e}  kap={kap:8.3e}"
            )

        if pres <= feas_tol and dres <= feas_tol and abs(pobj - dobj) <= gap_tol * (1.0 + abs(pobj)):
            status = OPTIMAL
            best = (0.0, X, xn, xf, y, tau, pres, dres, it, pobj, dobj)
            break

        score = max(pres, dres, abs(pobj - dobj) / (1.0 + abs(pobj)))
        if best is None or score < best[0]:
            best = (
                score,
                [x.copy() for x in X],
                xn.copy(),
                xf.copy(),
                y.copy(),
                tau,
                pres,
                dres,
                it,
                pobj,
                dobj,
            )

        # Farkas certificate checks for infeasible / unbounded programs
        if it > 1 and by > 0.0:
            res_sq = sum(float(np.linalg.norm(at_y[j] + Sm[j]) ** 2) for j in range(len(psd)))
            if have_nn:
                v = a_nn.T @ y + sn
                res_sq += float(v @ v)
            if have_f:
                v = a_f.T @ y
                res_sq += float(v @ v)
            if np.sqrt(res_sq) * max(1.0, normb) <= feas_tol * by:
                status = INFEASIBLE
                break
        if it > 1 and cx < 0.0:
            res = float(np.linalg.norm(apply_a(X, xn, xf)))
            if res * max(1.0, normc) <= feas_tol * (-cx):
                status = UNBOUNDED
                break

        # Nesterov-Todd scalings
        scal = [_nt_scaling(X[j], Sm[j]) for j in range(len(psd))]
        w2n = xn / sn if have_nn else np.zeros(0)

        # Schur complement M = A W A' over cone columns, bordered by free columns
        gmat = np.zeros((m + f, m + f))
        M = gmat[:m, :m]
        for j, cone in enumerate(psd):
            if not cone.rows.size:
                continue
            w = scal[j][3]
            waw = np.matmul(np.matmul(w, cone.coefs), w)
            contrib = waw.reshape(cone.rows.size, -1) @ cone.flat.T
            if cone.all_rows:
                M += contrib
            else:
                M[np.ix_(cone.rows, cone.rows)] += contrib
        if have_nn:
            M += (a_nn * w2n[None, :]) @ a_nn.T
        gmat[:m, :m] = 0.5 * (M + M.T)
        if have_f:
            gmat[:m, m:] = a_f
            gmat[m:, :m] = a_f.T

        try:
            with warnings.catch_warnings():
                # a collapsed scaling underflows the factorization; treat it
                # as a stall instead of letting the zero-pivot warning and
                # downstream NaNs escape
                warnings.simplefilter("ignore")
                glu = lu_factor(gmat, check_finite=False)
        except Exception:
            break  # fall through to best-iterate return
        udiag = np.abs(np.diagonal(glu[0]))
        if not np.all(np.isfinite(udiag)) or float(udiag.min()) == 0.0:
            break

        def gsolve(rhs: np.ndarray) -> np.ndarray:
            sol = lu_solve(glu, rhs, check_finite=False)
            sol += lu_solve(glu, rhs - gmat @ sol, check_finite=False)
            return sol

        # pieces independent of the complementarity right-hand side
        wc = [scal[j][3] @ psd[j].cobj @ scal[j][3] for j in range(len(psd))]
        u_vec = apply_cones(wc, w2n * c_nn if have_nn else np.zeros(0))
        wrd = [scal[j][3] @ rdc[j] @ scal[j][3] for j in range(len(psd))]
        wrdn = w2n * rdn if have_nn else np.zeros(0)
        awrd = apply_cones(wrd, wrdn)
        cwrd = c_dot(wrd, wrdn)

        def w_quad(mats, vn) -> float:
            # <xi, W(xi)> accumulated as sums of squares for stability
            total = 0.0
            for j in range(len(psd)):
                r = scal[j][0]
                total += float(np.linalg.norm(r.T @ mats[j] @ r) ** 2)
            if have_nn and vn is not None:
                total += float(w2n @ (vn * vn))
            return total

        sol_b = gsolve(np.concatenate([b, np.zeros(f)]))
        sol_u = gsolve(np.concatenate([u_vec, c_f]))
        if not (np.all(np.isfinite(sol_b)) and np.all(np.isfinite(sol_u))):
            break
        pb, pu = sol_b[:m], sol_u[:m]
        p2 = pb + pu
        q2 = (sol_b[m:] + sol_u[m:]) if have_f else np.zeros(0)
        # Delta-tau denominator, algebraically -(|W^.5 A'pb|^2 + |W^.5 (c - A'pu)|^2
        # + kap/tau); the naive inner-product form cancels catastrophically once
        # the scaling matrices become extreme near convergence.
        at_pb = apply_at(pb)
        at_pu = apply_at(pu)
        vec_c = [psd[j].cobj - at_pu[j] for j in range(len(psd))]
        denom = -(
            w_quad(at_pb, a_nn.T @ pb if have_nn else None)
            + w_quad(vec_c, (c_nn - a_nn.T @ pu) if have_nn else None)
            + kap / tau
        )

        def direction(rx, rxn, dtau_rhs) -> _Direction:
            arx = apply_cones(rx, rxn)
            h1 = -rp - arx + awrd
            crx = c_dot(rx, rxn)
            h3 = -rg - dtau_rhs / tau - crx + cwrd
            sol1 = gsolve(np.concatenate([h1, rdf]))
            p1, q1 = sol1[:m], sol1[m:]
            num = h3 - float((u_vec - b) @ p1) - (float(c_f @ q1) if have_f else 0.0)
            if denom == 0.0 or not np.isfinite(denom) or not np.isfinite(num):
                return _Direction(None, None, None, None, None, None, 0.0, 0.0, ok=False)
            dtau = num / denom
            dy = p1 + dtau * p2
            dxf = q1 + dtau * q2 if have_f else np.zeros(0)
            at_dy = apply_at(dy)
            dS = [-at_dy[j] + psd[j].cobj * dtau + rdc[j] for j in range(len(psd))]
            dsn = (-(a_nn.T @ dy) + c_nn * dtau + rdn) if have_nn else np.zeros(0)
            dX = []
            for j in range(len(psd)):
                w = scal[j][3]
                dxj = rx[j] - w @ dS[j] @ w
                dX.append(0.5 * (dxj + dxj.T))
            dxn = rxn - w2n * dsn if have_nn else np.zeros(0)
            dkap = (dtau_rhs - kap * dtau) / tau
            ok = all(np.all(np.isfinite(d)) for d in dX) and np.isfinite(dtau)
            return _Direction(dX, dS, dxn, dsn, dxf, dy, dtau, dkap, ok=ok)

        def max_step(d: _Direction) -> float:
            t = np.inf
            for j in range(len(psd)):
                t = min(t, _psd_max_step(scal[j][4], d.dX[j]))
                t = min(t, _psd_max_step(scal[j][5], d.dS[j]))
            if have_nn:
                t = min(t, _vec_max_step(xn, d.dxn), _vec_max_step(sn, d.dsn))
            if d.dtau < 0:
                t = min(t, -tau / d.dtau)
            if d.dkap < 0:
                t = min(t, -kap / d.dkap)
            return t

        aff = direction([-X[j] for j in range(len(psd))], -xn, -tau * kap)
        if not aff.ok:
            break

        if use_corrector:
            a_aff = min(1.0, max_step(aff))
            compl_aff = sum(
                float(
                    np.tensordot(
                        X[j] + a_aff * aff.dX[j], Sm[j] + a_aff * aff.dS[j], axes=([0, 1], [0, 1])
                    )
                )
                for j in range(len(psd))
            )
            if have_nn:
                compl_aff += float((xn + a_aff * aff.dxn) @ (sn + a_aff * aff.dsn))
            mu_aff = (compl_aff + (tau + a_aff * aff.dtau) * (kap + a_aff * aff.dkap)) / (nu + 1)
            sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))

            rx = []
            for j, cone in enumerate(psd):
                r, rinv, lam, w, _, _ = scal[j]
                dxt = rinv @ aff.dX[j] @ rinv.T
                dst = r.T @ aff.dS[j] @ r
                corr = 0.5 * (dxt @ dst + dst @ dxt)
                d = sigma * mu * np.eye(cone.side) - np.diag(lam**2) - corr
                rxj = r @ (2.0 * d / (lam[:, None] + lam[None, :])) @ r.T
                rx.append(0.5 * (rxj + rxj.T))
            rxn = (sigma * mu - xn * sn - aff.dxn * aff.dsn) / sn if have_nn else np.zeros(0)
            dtau_rhs = sigma * mu - tau * kap - aff.dtau * aff.dkap
            step = direction(rx, rxn, dtau_rhs)
            if not step.ok:
                step = aff
        else:
            step = aff

        alpha = min(1.0, _STEP_BACKOFF * max_step(step))
        if alpha < _STALL_ALPHA:
            break

        for j in range(len(psd)):
            X[j] = 0.5 * ((X[j] + alpha * step.dX[j]) + (X[j] + alpha * step.dX[j]).T)
            Sm[j] = 0.5 * ((Sm[j] + alpha * step.dS[j]) + (Sm[j] + alpha * step.dS[j]).T)
        if have_nn:
            xn = xn + alpha * step.dxn
            sn = sn + alpha * step.dsn
        if have_f:
            xf = xf + alpha * step.dxf
        y = y + alpha * step.dy
        tau = tau + alpha * step.dtau
        kap = kap + alpha * step.dkap

    if status in (INFEASIBLE, UNBOUNDED):
        return ConicSolution(
            status=status,
            primal_value=None,
            dual_value=None,
            gap=None,
            blocks={},
            iterations=it,
            primal_residual=float("nan"),
            dual_residual=float("nan"),
            y=None,
        )

    _, Xc, xnc, xfc, yc, tauc, pres, dres, iters, pobj, dobj = best
    return extract(status, Xc, xnc, xfc, yc, tauc, pres, dres, it, pobj, dobj)
