"""Strong-converse rate bounds and the entanglement quantities behind them.

``q_gamma`` is an SDP-computable rate that upper bounds quantum capacity
with the strong-converse property; it is additive under tensor products and
equals log2 d on the d-dimensional identity.  ``q_theta`` bounds it from
above by the completely bounded trace norm of the channel composed with
transposition.  ``e_w`` is the entanglement witness maximum underpinning the
max-relative-entropy characterization checked through ``d_max``.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .channels import Channel, choi
from .conic import ConicProgram, SolverError, solve
from .matops import HermMat, _ptrace_array, _ptranspose_array, hermitian_basis
from .results import BoundResult

SUPPORT_RTOL = 1e-10


@dataclass
class GammaCertificate:
    """Optimal variables of the rate SDP, primal and/or dual form."""

    value: float
    R: np.ndarray | None = None
    rho: np.ndarray | None = None
    V: np.ndarray | None = None
    Y: np.ndarray | None = None
    mu: float | None = None


def _result(name: str, sol, t0: float, certificate=None) -> BoundResult:
    value = float("nan") if sol.primal_value is None else float(sol.primal_value)
    log_value = math.log2(value) if value > 0.0 and math.isfinite(value) else float("nan")
    return BoundResult(
        name=name,
        value=value,
        log_value=log_value,
        status=sol.status,
        gap=float("nan") if sol.gap is None else float(sol.gap),
        wall_time=time.perf_counter() - t0,
        certificate=certificate,
    )


def q_gamma(
    ch: Channel,
    form: str = "primal",
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-8,
) -> BoundResult:
    """Strong-converse rate bound; ``log_value`` is the rate in qubits.

    ``form='primal'`` maximizes tr(J R) over states rho and operators R with
    -rho (x) I <= R^TB <= rho (x) I; ``form='dual'`` minimizes mu over PSD
    V, Y with (V - Y)^TB >= J and tr_B(V + Y) <= mu I.  Both give the same
    value within solver tolerance, and each carries its own certificate.
    """
    if form not in ("primal", "dual"):
        raise ValueError(f"form must be 'primal' or 'dual', got {form!r}")
    j = choi(ch)
    dims = (ch.d_in, ch.d_out)
    d = dims[0] * dims[1]
    t0 = time.perf_counter()

    if form == "primal":
        prog = ConicProgram("max")
        prog.herm_block("R", d)
        prog.herm_block("rho", ch.d_in)
        prog.herm_block("Zp", d)
        prog.herm_block("Zm", d)
        prog.set_objective({"R": j.mat.data})
        prog.add_constraint({"rho": np.eye(ch.d_in)}, "==", 1.0)
        for bmat in hermitian_basis(d):
            bt = _ptranspose_array(bmat, dims, 1)
            tr_b = _ptrace_array(bmat, dims, 1)
            prog.add_constraint({"Zp": bmat, "R": bt, "rho": -tr_b}, "==", 0.0)
            prog.add_constraint({"Zm": bmat, "R": -bt, "rho": -tr_b}, "==", 0.0)
        sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
        cert = None
        if sol.blocks:
            cert = GammaCertificate(
                value=float("nan") if sol.primal_value is None else float(sol.primal_value),
                R=sol.blocks["R"],
                rho=sol.blocks["rho"],
            )
        return _result("q_gamma", sol, t0, cert)

    prog = ConicProgram("min")
    prog.herm_block("V", d)
    prog.herm_block("Y", d)
    prog.herm_block("Z1", d)
    prog.herm_block("Z2", ch.d_in)
    prog.free_block("mu", 1)
    prog.set_objective({"mu": [1.0]})
    # Z1 = (V - Y)^TB - J
    for bmat in hermitian_basis(d):
        bt = _ptranspose_array(bmat, dims, 1)
        rhs = float(np.real(np.trace(bmat @ j.mat.data)))
        prog.add_constraint({"Z1": bmat, "V": -bt, "Y": bt}, "==", -rhs)
    # Z2 = mu I_A - tr_B(V + Y)
    eye_b = np.eye(ch.d_out)
    for dmat in hermitian_basis(ch.d_in):
        lift = np.kron(dmat, eye_b)
        prog.add_constraint(
            {"Z2": dmat, "V": lift, "Y": lift, "mu": [-float(np.real(np.trace(dmat)))]},
            "==",
            0.0,
        )
    sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
    cert = None
    if sol.blocks:
        cert = GammaCertificate(
            value=float("nan") if sol.primal_value is None else float(sol.primal_value),
            V=sol.blocks["V"],
            Y=sol.blocks["Y"],
            mu=float(sol.blocks["mu"][0]),
        )
    return _result("q_gamma", sol, t0, cert)


def e_w(
    rho: HermMat,
    form: str = "primal",
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-8,
) -> float:
    """log2 of the partial-transpose witness maximum of a bipartite state.

    ``form='primal'`` maximizes tr(rho R) over R >= 0 with -I <= R^TB <= I;
    ``form='dual'`` minimizes the trace norm of X^TB over X >= rho.  States
    with trace below one are accepted.
    """
    if form not in ("primal", "dual"):
        raise ValueError(f"form must be 'primal' or 'dual', got {form!r}")
    if len(rho.dims) != 2:
        raise ValueError(f"expected a bipartite operator, got dims {rho.dims}")
    lo = float(np.linalg.eigvalsh(rho.data)[0])
    if lo < -1e-8:
        raise ValueError(f"state is not positive semidefinite (min eig {lo:g})")
    dims = rho.dims
    d = rho.side

    if form == "primal":
        prog = ConicProgram("max")
        prog.herm_block("R", d)
        prog.herm_block("Zp", d)
        prog.herm_block("Zm", d)
        prog.set_objective({"R": rho.data})
        for bmat in hermitian_basis(d):
            bt = _ptranspose_array(bmat, dims, 1)
            tr_b = float(np.real(np.trace(bmat)))
            prog.add_constraint({"Zp": bmat, "R": bt}, "==", tr_b)
            prog.add_constraint({"Zm": bmat, "R": -bt}, "==", tr_b)
    else:
        prog = ConicProgram("min")
        prog.herm_block("Z", d)  # X = rho + Z
        prog.herm_block("P", d)
        prog.herm_block("Q", d)
        prog.set_objective({"P": np.eye(d), "Q": np.eye(d)})
        rho_t = _ptranspose_array(rho.data, dims, 1)
        for bmat in hermitian_basis(d):
            bt = _ptranspose_array(bmat, dims, 1)
            rhs = -float(np.real(np.trace(bmat @ rho_t)))
            prog.add_constraint({"Z": bt, "P": -bmat, "Q": bmat}, "==", rhs)

    sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
    if sol.status != "optimal":
        raise SolverError(f"witness program ended with {sol.status}", sol.status)
    return math.log2(float(sol.primal_value))


def d_max(rho: HermMat, sigma: HermMat) -> float:
    """Max-relative entropy log2 min{mu : rho <= mu sigma}, computed spectrally.

    Support violations (rho not inside the support of sigma) return +inf and
    emit a warning.  No conic solve is involved.
    """
    if rho.side != sigma.side:
        raise ValueError("operators must have equal side")
    w, v = np.linalg.eigh(sigma.data)
    top = float(w[-1])
    if top <= 0.0:
        warnings.warn("reference operator is zero; max-relative entropy is +inf")
        return float("inf")
    keep = w > SUPPORT_RTOL * top
    v_out = v[:, ~keep]
    if v_out.shape[1]:
        leak = float(np.linalg.norm(v_out.conj().T @ rho.data @ v_out))
        if leak > 1e-10 * max(1.0, float(np.abs(rho.data).max())):
            warnings.warn("state leaves the support of the reference; returning +inf")
            return float("inf")
    v_in = v[:, keep]
    inv_sqrt = v_in * (1.0 / np.sqrt(w[keep]))[None, :]
    core = inv_sqrt.conj().T @ rho.data @ inv_sqrt
    lam = float(np.linalg.eigvalsh(0.5 * (core + core.conj().T))[-1])
    if lam <= 0.0:
        return float("-inf")
    return math.log2(lam)


def purified_output(ch: Channel, rho_a: np.ndarray) -> HermMat:
    """Bipartite state (rho^1/2 (x) I) J (rho^1/2 (x) I) of a channel.

    ``rho_a`` must be a density matrix on the input space; rank-deficient
    inputs are handled through the pseudo square root (with a warning).
    """
    rho_a = np.asarray(rho_a, dtype=np.complex128)
    if rho_a.shape != (ch.d_in, ch.d_in):
        raise ValueError(f"state must be {ch.d_in}x{ch.d_in}, got {rho_a.shape}")
    if abs(np.trace(rho_a).real - 1.0) > 1e-8:
        raise ValueError("input state must have unit trace")
    w, v = np.linalg.eigh(0.5 * (rho_a + rho_a.conj().T))
    if w[0] < -1e-8:
        raise ValueError(f"input state is not positive semidefinite (min eig {w[0]:g})")
    if np.any(w < 1e-12):
        warnings.warn("singular input state; using the pseudo square root")
    root = (v * np.sqrt(np.clip(w, 0.0, None))[None, :]) @ v.conj().T
    lift = np.kron(root, np.eye(ch.d_out))
    j = choi(ch)
    out = lift @ j.mat.data @ lift.conj().T
    out = 0.5 * (out + out.conj().T)
    return HermMat(out, (ch.d_in, ch.d_out))


def q_theta(
    ch: Channel,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-8,
) -> BoundResult:
    """log2 of the completely bounded trace norm of the channel composed
    with transposition; upper bounds the ``q_gamma`` rate.

    The norm is the SDP maximum of Re tr(J^TB X) over off-diagonal blocks X
    of a PSD matrix whose diagonal blocks are rho0 (x) I and rho1 (x) I for
    density matrices rho0, rho1.
    """
    j = choi(ch)
    dims = (ch.d_in, ch.d_out)
    d = dims[0] * dims[1]
    jt = _ptranspose_array(j.mat.data, dims, 1)
    t0 = time.perf_counter()

    big = 2 * d
    cost = np.zeros((big, big), dtype=np.complex128)
    cost[:d, d:] = 0.5 * jt
    cost[d:, :d] = 0.5 * jt.conj().T

    prog = ConicProgram("max")
    prog.herm_block("G", big)
    prog.herm_block("rho0", ch.d_in)
    prog.herm_block("rho1", ch.d_in)
    prog.set_objective({"G": cost})
    prog.add_constraint({"rho0": np.eye(ch.d_in)}, "==", 1.0)
    prog.add_constraint({"rho1": np.eye(ch.d_in)}, "==", 1.0)
    for bmat in hermitian_basis(d):
        tr_b = _ptrace_array(bmat, dims, 1)
        top = np.zeros((big, big), dtype=np.complex128)
        top[:d, :d] = bmat
        prog.add_constraint({"G": top, "rho0": -tr_b}, "==", 0.0)
        bot = np.zeros((big, big), dtype=np.complex128)
        bot[d:, d:] = bmat
        prog.add_constraint({"G": bot, "rho1": -tr_b}, "==", 0.0)
    sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
    return _result("q_theta", sol, t0)


def strong_converse_error(n_uses: int, rate: float, q_value: float) -> float:
    """Error floor forced after n uses at a rate above a strong-converse bound.

    Returns max(0, 1 - 2^{n (q_value - rate)}), clamped to [0, 1].
    """
    if n_uses < 1:
        raise ValueError(f"n_uses must be at least 1, got {n_uses}")
    exponent = n_uses * (q_value - rate)
    if exponent >= 0.0:
        return 0.0
    return min(1.0, 1.0 - 2.0**exponent)
