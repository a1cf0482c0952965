"""One-shot coding fidelity SDPs and the derived converse-bound family.

The central object is the optimal code fidelity of a channel for a code of
size k, restricted to codes whose bipartite operator respects positivity of
the partial transpose (class ``ppt``), optionally intersected with the
no-signalling codes (class ``ns_ppt``).  Everything else is a relaxation of
that program: the bounds ``f``, ``g``, ``g_tilde`` and ``g_hat`` trade the
code-size search for a single SDP whose optimum, in -log2 domain, upper
bounds the one-shot capacity.

Operator inequalities are compiled to explicit PSD slack blocks tied by
scalar rows over an orthonormal Hermitian basis; see :mod:`qcap.conic`.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from .channels import Channel, choi
from .conic import ConicProgram, SolverError, solve
from .matops import _ptrace_array, _ptranspose_array, hermitian_basis
from .results import BoundResult

PPT = "ppt"
NS_PPT = "ns_ppt"

# fidelity slack when deciding whether a code size k is achievable
K_SEARCH_TOL = 1e-9

EPS_FLOOR = 1e-12


@dataclass
class FidelityResult:
    """Optimal code fidelity for one code size."""

    k: int
    fidelity: float
    code_class: str


@dataclass
class OneShotCertificate:
    """Primal variables backing a one-shot bound value."""

    W: np.ndarray
    rho: np.ndarray
    S: np.ndarray | None = None
    Theta: np.ndarray | None = None
    t: float | None = None
    value: float | None = None


def check_eps(eps: float) -> float:
    """Validate an error tolerance; eps == 0 is nudged to 1e-12 with a warning."""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"error tolerance must lie in [0, 1), got {eps}")
    if eps == 0.0:
        warnings.warn(
            f"eps = 0 replaced by {EPS_FLOOR:g} to keep the programs strictly feasible",
            stacklevel=3,
        )
        return EPS_FLOOR
    return float(eps)


def _check_class(code_class: str) -> str:
    if code_class not in (PPT, NS_PPT):
        raise ValueError(f"code class must be {PPT!r} or {NS_PPT!r}, got {code_class!r}")
    return code_class


def _add_upper_slack(prog: ConicProgram, dims: tuple[int, int]) -> None:
    """Tie Zub = rho (x) I - W over the bipartite basis (so W <= rho (x) I)."""
    d = dims[0] * dims[1]
    for bmat in hermitian_basis(d):
        tr_b = _ptrace_array(bmat, dims, 1)
        prog.add_constraint({"Zub": bmat, "W": bmat, "rho": -tr_b}, "==", 0.0)


def _add_pt_box(prog: ConicProgram, dims: tuple[int, int], bound: str, scale: float) -> None:
    """Constrain -scale * (bound (x) I) <= W^TB <= scale * (bound (x) I).

    ``bound`` names a PSD block on the input factor; two slack blocks Zp, Zm
    carry the operator inequalities.
    """
    d = dims[0] * dims[1]
    for bmat in hermitian_basis(d):
        bt = _ptranspose_array(bmat, dims, 1)
        tr_b = scale * _ptrace_array(bmat, dims, 1)
        prog.add_constraint({"Zp": bmat, "W": bt, bound: -tr_b}, "==", 0.0)
        prog.add_constraint({"Zm": bmat, "W": -bt, bound: -tr_b}, "==", 0.0)


def _add_marginal_rows(prog: ConicProgram, dims: tuple[int, int], rhs_scale: float | None) -> None:
    """Rows pinning tr_A W: either to rhs_scale * I_B, or to t * I_B (t free)."""
    d_a, d_b = dims
    eye_a = np.eye(d_a)
    for cmat in hermitian_basis(d_b):
        coeff = np.kron(eye_a, cmat)
        tr_c = float(np.real(np.trace(cmat)))
        if rhs_scale is None:
            prog.add_constraint({"W": coeff, "t": [-tr_c]}, "==", 0.0)
        else:
            prog.add_constraint({"W": coeff}, "==", rhs_scale * tr_c)


def fidelity_sdp(
    ch: Channel,
    k: int,
    code_class: str = PPT,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-8,
) -> FidelityResult:
    """Best fidelity of a size-k code on ``ch`` within the given code class.

    Raises :class:`SolverError` if the solver does not reach an optimal
    certificate at the requested tolerances.
    """
    if k < 1:
        raise ValueError(f"code size must be a positive integer, got {k}")
    _check_class(code_class)
    j = choi(ch)
    dims = (ch.d_in, ch.d_out)
    d = dims[0] * dims[1]

    prog = ConicProgram("max")
    prog.herm_block("W", d)
    prog.herm_block("rho", ch.d_in)
    prog.herm_block("Zub", d)
    prog.herm_block("Zp", d)
    prog.herm_block("Zm", d)
    prog.set_objective({"W": j.mat.data})
    prog.add_constraint({"rho": np.eye(ch.d_in)}, "==", 1.0)
    _add_upper_slack(prog, dims)
    _add_pt_box(prog, dims, "rho", 1.0 / k)
    if code_class == NS_PPT:
        _add_marginal_rows(prog, dims, 1.0 / k**2)

    sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
    if sol.status != "optimal":
        raise SolverError(f"fidelity program for k={k} ended with {sol.status}", sol.status)
    return FidelityResult(k=k, fidelity=float(sol.primal_value), code_class=code_class)


def oneshot_capacity(
    ch: Channel,
    eps: float,
    code_class: str = PPT,
    exhaustive: bool = False,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-8,
) -> float:
    """log2 of the largest code size with fidelity at least 1 - eps.

    The search ascends k = 1, 2, ... up to d_in and normally stops at the
    first failing size; ``exhaustive`` evaluates every size instead (the
    fidelity is expected, and empirically observed, to be non-increasing
    in k, so the two agree).
    """
    eps = check_eps(eps)
    best = 1
    for k in range(2, ch.d_in + 1):
        res = fidelity_sdp(ch, k, code_class, feas_tol=feas_tol, gap_tol=gap_tol)
        if res.fidelity >= 1.0 - eps - K_SEARCH_TOL:
            best = k
        elif not exhaustive:
            break
    return math.log2(best)


def _finish(name: str, sol, t0: float, cert: OneShotCertificate | None) -> BoundResult:
    value = float("nan") if sol.primal_value is None else float(sol.primal_value)
    log_value = -math.log2(value) if value > 0.0 and math.isfinite(value) else float("nan")
    return BoundResult(
        name=name,
        value=value,
        log_value=log_value,
        status=sol.status,
        gap=float("nan") if sol.gap is None else float(sol.gap),
        wall_time=time.perf_counter() - t0,
        certificate=cert,
    )


def _certificate(sol, with_theta: bool, with_t: bool) -> OneShotCertificate | None:
    if not sol.blocks:
        return None
    return OneShotCertificate(
        W=sol.blocks["W"],
        rho=sol.blocks["rho"],
        S=sol.blocks.get("S"),
        Theta=sol.blocks.get("Theta") if with_theta else None,
        t=float(sol.blocks["t"][0]) if with_t and "t" in sol.blocks else None,
        value=sol.primal_value,
    )


def bound_f(
    ch: Channel, eps: float, feas_tol: float = 1e-8, gap_tol: float = 1e-8
) -> BoundResult:
    """Converse bound without any partial-transpose box on the code operator.

    Minimizes tr S over 0 <= W <= rho (x) I meeting the fidelity target,
    with S (x) I >= W + Theta^TB for some PSD witness Theta.  -log2 of the
    optimum upper bounds the one-shot capacity.
    """
    eps = check_eps(eps)
    j = choi(ch)
    dims = (ch.d_in, ch.d_out)
    d = dims[0] * dims[1]
    t0 = time.perf_counter()

    prog = ConicProgram("min")
    prog.herm_block("W", d)
    prog.herm_block("rho", ch.d_in)
    prog.herm_block("S", ch.d_in)
    prog.herm_block("Theta", d)
    prog.herm_block("Zub", d)
    prog.herm_block("Zf", d)
    prog.set_objective({"S": np.eye(ch.d_in)})
    prog.add_constraint({"W": j.mat.data}, ">=", 1.0 - eps)
    prog.add_constraint({"rho": np.eye(ch.d_in)}, "==", 1.0)
    _add_upper_slack(prog, dims)
    # Zf = S (x) I - W - Theta^TB
    for bmat in hermitian_basis(d):
        bt = _ptranspose_array(bmat, dims, 1)
        tr_b = _ptrace_array(bmat, dims, 1)
        prog.add_constraint({"Zf": bmat, "W": bmat, "Theta": bt, "S": -tr_b}, "==", 0.0)

    sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
    return _finish("f", sol, t0, _certificate(sol, with_theta=True, with_t=False))


def _g_common(ch: Channel, eps: float, with_t: bool, m_hat: float | None) -> ConicProgram:
    j = choi(ch)
    dims = (ch.d_in, ch.d_out)
    d = dims[0] * dims[1]
    prog = ConicProgram("min")
    prog.herm_block("W", d)
    prog.herm_block("rho", ch.d_in)
    prog.herm_block("S", ch.d_in)
    prog.herm_block("Zub", d)
    prog.herm_block("Zp", d)
    prog.herm_block("Zm", d)
    if with_t:
        prog.free_block("t", 1)
    prog.set_objective({"S": np.eye(ch.d_in)})
    prog.add_constraint({"W": j.mat.data}, ">=", 1.0 - eps)
    prog.add_constraint({"rho": np.eye(ch.d_in)}, "==", 1.0)
    _add_upper_slack(prog, dims)
    _add_pt_box(prog, dims, "S", 1.0)
    if with_t:
        _add_marginal_rows(prog, dims, None)
    if m_hat is not None:
        prog.add_constraint({"t": [1.0]}, ">=", m_hat**2)
    return prog


def bound_g(ch: Channel, eps: float, feas_tol: float = 1e-8, gap_tol: float = 1e-8) -> BoundResult:
    """Converse bound boxing W^TB by +-S (x) I; tighter than ``f``."""
    eps = check_eps(eps)
    t0 = time.perf_counter()
    prog = _g_common(ch, eps, with_t=False, m_hat=None)
    sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
    return _finish("g", sol, t0, _certificate(sol, with_theta=False, with_t=False))


def bound_g_tilde(
    ch: Channel, eps: float, feas_tol: float = 1e-8, gap_tol: float = 1e-8
) -> BoundResult:
    """``g`` plus the no-signalling marginal relaxation tr_A W = t I_B."""
    eps = check_eps(eps)
    t0 = time.perf_counter()
    prog = _g_common(ch, eps, with_t=True, m_hat=None)
    sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
    return _finish("g_tilde", sol, t0, _certificate(sol, with_theta=False, with_t=True))


def bound_g_hat(
    ch: Channel,
    eps: float,
    m_hat: float,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-8,
) -> BoundResult:
    """``g_tilde`` plus the self-improving floor t >= m_hat**2.

    ``m_hat`` must be positive; values above 1 make the program infeasible,
    which is reported through the result status.
    """
    eps = check_eps(eps)
    if m_hat <= 0.0:
        raise ValueError(f"m_hat must be positive, got {m_hat}")
    t0 = time.perf_counter()
    prog = _g_common(ch, eps, with_t=True, m_hat=m_hat)
    sol = solve(prog, feas_tol=feas_tol, gap_tol=gap_tol)
    return _finish("g_hat", sol, t0, _certificate(sol, with_theta=False, with_t=True))


def g_hat_iterate(
    ch: Channel,
    eps: float,
    rounds: int,
    feas_tol: float = 1e-8,
    gap_tol: float = 1e-8,
) -> list[BoundResult]:
    """Iterate the self-improving bound: the floor of each round is the
    previous round's optimum, seeded by the plain ``g`` value.

    Returns one result per round; the value sequence is non-decreasing.
    Raises :class:`SolverError` (annotated with the failing round) if any
    round does not solve to optimality.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be at least 1, got {rounds}")
    seed = bound_g(ch, eps, feas_tol=feas_tol, gap_tol=gap_tol)
    if seed.status != "optimal":
        raise SolverError(f"seed bound ended with status {seed.status}", seed.status)
    m_hat = seed.value
    out: list[BoundResult] = []
    for rnd in range(1, rounds + 1):
        res = bound_g_hat(ch, eps, m_hat, feas_tol=feas_tol, gap_tol=gap_tol)
        if res.status != "optimal":
            raise SolverError(f"round {rnd} ended with status {res.status}", res.status)
        out.append(res)
        m_hat = res.value
    return out
