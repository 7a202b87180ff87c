"""Average-SINR-constrained total-power minimization (noncritical design).

The rank-one beamforming problem is lifted to PSD matrices, the average-SINR
constraint becomes a linear trace inequality through the expected phasor
matrix, and the dropped rank-one constraint is recovered by an iterative
penalty on tr(W) - lambda_max(W), linearized at the current leading
eigenvector each round.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import expected_phase_matrix
from .conic import ConeProgramBuilder, SolveOptions, solve
from .conic.solver import OPTIMAL, PRIMAL_INFEASIBLE
from .errors import ConvergenceError, InfeasibleDesignError
from .network import BeamDesign
from .numerics import max_eigpair


@dataclass
class PenaltyConfig:
    rho0: float = 1.0
    growth: float = 3.0
    rank_gap_tol: float = 1e-6
    max_iters: int = 30
    solver: SolveOptions = field(default_factory=SolveOptions)


def expected_channel_matrix(channel, phasor_matrix: np.ndarray) -> np.ndarray:
    """E[h h^H] = diag(h_est) E[q q^H] diag(h_est)^H, elementwise form."""
    h = channel.estimated
    return np.outer(h, h.conj()) * phasor_matrix


def avg_constraint_coeffs(scenario, user):
    """Per-region Hermitian coefficients G_j and rhs of the average-SINR row.

    The emitted row reads sum_j tr(G_j W_j) >= rhs and is linear in all W:
    own region enters at weight alpha - gamma*t1, every other region at
    -gamma*t2_j, all through the user's expected channel matrix.
    """
    k = scenario.feeds
    d = expected_channel_matrix(
        user.channel, expected_phase_matrix(user.phase_model, k)
    )
    gamma = user.gamma_lin
    t1 = scenario.intra_weight(user)
    coeffs = {}
    for j in range(scenario.beams):
        if j == user.region:
            coeffs[j] = (user.alpha - gamma * t1) * d
        else:
            coeffs[j] = -gamma * scenario.region_alpha_total(j) * d
    return coeffs, gamma * scenario.noise_power


class AvgSinrProblem:
    """Assembled constraint system, reused across penalty iterations."""

    def __init__(self, scenario):
        self.scenario = scenario
        k, m = scenario.feeds, scenario.beams
        bld = ConeProgramBuilder()
        self.w_refs = [bld.add_hermitian_psd(k) for _ in range(m)]
        self.sinr_slack = bld.add_nonneg(len(scenario.users))
        self.feed_slack = bld.add_nonneg(k)
        self.n_sinr_rows = len(scenario.users)
        for idx, user in enumerate(scenario.users):
            coeffs, rhs = avg_constraint_coeffs(scenario, user)
            terms = [(self.w_refs[j], g) for j, g in coeffs.items()]
            terms.append((self.sinr_slack, {idx: -1.0}))
            bld.add_eq(terms, rhs)
        caps = scenario.power_caps
        for kk in range(k):
            e = np.zeros((k, k))
            e[kk, kk] = 1.0
            terms = [(ref, e) for ref in self.w_refs]
            terms.append((self.feed_slack, {kk: 1.0}))
            bld.add_eq(terms, caps[kk])
        self.builder = bld

    def solve(self, objective_matrices=None, options=None):
        """Solve with per-region Hermitian objective matrices (default: identity)."""
        k = self.scenario.feeds
        if objective_matrices is None:
            objective_matrices = [np.eye(k)] * self.scenario.beams
        self.builder.set_objective(
            [(ref, obj) for ref, obj in zip(self.w_refs, objective_matrices)]
        )
        problem = self.builder.build()
        sol = solve(problem, options or SolveOptions())
        ws = [self.builder.extract(ref, sol.x) for ref in self.w_refs]
        return ws, sol

    def infeasibility_family(self, sol) -> str:
        """Attribute an infeasibility certificate to a constraint family.

        The certificate satisfies b'y > 0; the rows contributing positively
        to that inner product are the ones driving the contradiction.
        """
        if sol.certificate is None:
            return "unknown"
        contrib = sol.certificate * self.builder.rhs_vector
        sinr_w = contrib[: self.n_sinr_rows].sum()
        feed_w = contrib[self.n_sinr_rows :].sum()
        return "average-sinr" if sinr_w >= feed_w else "per-feed-power"


def solve_sdr_init(problem: AvgSinrProblem, options=None):
    """Relaxation without the rank constraint; typed failure when infeasible."""
    ws, sol = problem.solve(options=options)
    if sol.status == PRIMAL_INFEASIBLE:
        raise InfeasibleDesignError(
            "relaxed design problem is infeasible",
            family=problem.infeasibility_family(sol),
        )
    if sol.status != OPTIMAL:
        raise ConvergenceError(f"initial relaxation ended with status {sol.status}")
    return ws, sol


def penalty_step(problem: AvgSinrProblem, top_vectors, rho: float, options=None):
    """One penalized solve: objective (1+rho) tr(W) - rho v^H W v per region."""
    k = problem.scenario.feeds
    objs = [
        (1.0 + rho) * np.eye(k) - rho * np.outer(v, v.conj()) for v in top_vectors
    ]
    ws, sol = problem.solve(objs, options=options)
    if sol.status != OPTIMAL:
        raise ConvergenceError(f"penalty solve ended with status {sol.status}")
    return ws, sol


def rank_gaps(ws):
    """(gaps, eigenpairs): tr(W) - lambda_max per region, nonnegative for PSD W."""
    pairs = [max_eigpair(w) for w in ws]
    gaps = np.array([np.trace(w).real - lam for w, (lam, _) in zip(ws, pairs)])
    return gaps, pairs


def extract_beams(ws, rank_gap_tol: float) -> np.ndarray:
    """Leading-eigenpair extraction w = sqrt(lambda) v, refused above tolerance.

    The global phase is fixed so the largest-magnitude entry is real positive,
    making extracted designs reproducible.
    """
    gaps, pairs = rank_gaps(ws)
    if np.max(gaps) > rank_gap_tol:
        raise ConvergenceError(
            f"rank gap {np.max(gaps):.3e} above tolerance {rank_gap_tol:.1e}; "
            "extraction refused"
        )
    cols = []
    for lam, v in pairs:
        w = np.sqrt(max(lam, 0.0)) * v
        pivot = np.argmax(np.abs(w))
        if np.abs(w[pivot]) > 0:
            w = w * np.exp(-1j * np.angle(w[pivot]))
        cols.append(w)
    return np.column_stack(cols)


def run_penalty_loop(problem, config: PenaltyConfig):
    """Shared rank-one recovery loop; returns (ws, iterations, gaps, history)."""
    ws, _ = solve_sdr_init(problem, options=config.solver)
    rho = config.rho0
    history = []
    iterations = 0
    prev_gap = np.inf
    stagnant = 0
    for _ in range(config.max_iters):
        gaps, pairs = rank_gaps(ws)
        obj = float(sum(np.trace(w).real for w in ws))
        history.append({"power": obj, "max_gap": float(gaps.max()), "rho": rho})
        if gaps.max() <= config.rank_gap_tol:
            return ws, iterations, gaps, history
        # five rounds of rho growth without halving the gap means the
        # tolerance is unreachable at this solve accuracy
        stagnant = stagnant + 1 if gaps.max() > 0.5 * prev_gap else 0
        if stagnant >= 5:
            break
        prev_gap = gaps.max()
        ws, _ = penalty_step(problem, [v for _, v in pairs], rho, options=config.solver)
        iterations += 1
        gaps, _ = rank_gaps(ws)
        if gaps.max() > config.rank_gap_tol:
            rho *= config.growth
    gaps, _ = rank_gaps(ws)
    if gaps.max() <= config.rank_gap_tol:
        return ws, iterations, gaps, history
    raise ConvergenceError(
        f"penalty loop did not reach rank gap {config.rank_gap_tol:.1e} in "
        f"{iterations} iterations (final gap {gaps.max():.3e})"
    )


def design_avg_sinr(scenario, config: PenaltyConfig | None = None) -> BeamDesign:
    """Full noncritical design: relaxation, penalty loop, beam extraction."""
    config = config or PenaltyConfig()
    problem = AvgSinrProblem(scenario)
    ws, iterations, gaps, history = run_penalty_loop(problem, config)
    beams = extract_beams(ws, config.rank_gap_tol)
    return BeamDesign(
        beams=beams,
        noise_power=scenario.noise_power,
        lifted=ws,
        algorithm="avg",
        iterations=iterations,
        max_rank_gap=float(np.max(gaps)),
        status="OPTIMAL",
        metadata={
            "gamma_lin": [u.gamma_lin for u in scenario.users],
            "sigma_deg": [np.rad2deg(u.sigma_rad) for u in scenario.users],
            "eta": [u.eta for u in scenario.users],
            "history": history,
        },
    )
