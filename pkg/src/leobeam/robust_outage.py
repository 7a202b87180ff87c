"""Outage-probability-constrained total-power minimization (critical design).

The per-terminal outage constraint Pr{SINR < gamma} <= p is intractable as
stated.  It is handled in three steps: (1) rewrite SINR >= gamma as a
quadratic form q^H Z q >= sigma0^2 in the unit-modulus phasor q; (2) expand
the form to second order in the phase error, which turns it into a Gaussian
quadratic chance constraint; (3) upper-bound the tail with a Bernstein-type
concentration inequality whose least conservative calibration reduces to a
linear row plus two second-order cone rows, all linear in the lifted W
matrices.  Rank-one recovery reuses the same penalty loop as the
average-SINR design.
"""

import warnings

import numpy as np

from .conic import ConeProgramBuilder
from .conic.cones import smat
from .errors import ConfigError
from .network import BeamDesign
from .numerics import hermitian_from_embedding
from .robust_avg import PenaltyConfig, extract_beams, run_penalty_loop

# Above this phase-error std dev (radians) the second-order expansion the
# outage bound rests on degrades noticeably; warn but proceed.
SMALL_SIGMA_GUARD_RAD = np.deg2rad(15.0)


def taylor_quad_matrix(a_sym: np.ndarray) -> np.ndarray:
    """Quadratic-term matrix of the phasor expansion: off-diagonals copied,
    diagonal entry i replaced by A_ii - sum_n A_in."""
    a = np.asarray(a_sym, dtype=float)
    out = a.copy()
    np.fill_diagonal(out, np.diag(a) - a.sum(axis=1))
    return out


def taylor_linear_vector(b_skew: np.ndarray) -> np.ndarray:
    """Linear-term vector of the phasor expansion: twice the row sums."""
    return 2.0 * np.asarray(b_skew, dtype=float).sum(axis=1)


def taylor_quadratic(z: np.ndarray, theta: np.ndarray) -> float:
    """Second-order expansion of x^H Z x at x = exp(j theta).

    Exact at theta = 0 (the constant term is the all-ones quadratic form);
    the remainder is third order in ||theta||.
    """
    z = np.asarray(z)
    theta = np.asarray(theta, dtype=float)
    const = float(z.sum().real)
    quad = theta @ taylor_quad_matrix(z.real) @ theta
    lin = theta @ taylor_linear_vector(z.imag)
    return const + quad + lin


def mu_from_outage(p: float) -> float:
    """Bound parameter making the two Bernstein branch calibrations coincide.

    Solves (1 - 1/(2 mu^2)) mu = sqrt(ln(1/p)); the positive root is
    (g + sqrt(g^2 + 2))/2 and always exceeds 1/sqrt(2).
    """
    if not 0.0 < p < 1.0:
        raise ConfigError("outage probability must lie in (0, 1)")
    g = np.sqrt(np.log(1.0 / p))
    return float(0.5 * (g + np.sqrt(g * g + 2.0)))


def bernstein_tail_bound(q_mat: np.ndarray, r_vec: np.ndarray, s: float, mu: float):
    """Lemma-style tail bound on Pr{e'Qe + 2 e'r + s <= 0} for e ~ N(0, I)."""
    tau = s + float(np.trace(q_mat))
    t_scale = mu * np.linalg.norm(q_mat, "fro") + np.linalg.norm(r_vec) / np.sqrt(2.0)
    if t_scale == 0.0:
        return 0.0 if tau > 0 else 1.0
    if tau <= 0:
        return 1.0
    lam_mu = (1.0 - 0.5 / mu**2) * mu
    if tau <= 2.0 * lam_mu * t_scale:
        return float(np.exp(-(tau**2) / (4.0 * t_scale**2)))
    return float(np.exp(-tau * lam_mu / t_scale + lam_mu**2))


def margin_scalars(scenario, user) -> dict:
    """Per-region scalars of the SINR margin form Z(W) = sum_j beta_j * zeta(W_j)."""
    gamma = user.gamma_lin
    t1 = scenario.intra_weight(user)
    out = {}
    for j in range(scenario.beams):
        if j == user.region:
            out[j] = user.alpha / gamma - t1
        else:
            out[j] = -scenario.region_alpha_total(j)
    return out


def margin_matrix(scenario, user, ws) -> np.ndarray:
    """Numeric Z for given W matrices: q^H Z q >= sigma0^2 iff SINR >= gamma
    (under the fixed-weight interference accounting)."""
    h = user.channel.estimated
    phase_outer = np.outer(h.conj(), h)
    betas = margin_scalars(scenario, user)
    t = sum(beta * ws[j] for j, beta in betas.items())
    return t * phase_outer


def _cov_sqrt(user, feeds: int) -> np.ndarray | None:
    """Symmetric PSD square root of the phase covariance; None for identity."""
    if user.phase_cov is None:
        return None
    c = np.asarray(user.phase_cov, dtype=float)
    vals, vecs = np.linalg.eigh(0.5 * (c + c.T))
    if vals.min() < -1e-10:
        raise ConfigError("phase covariance must be PSD")
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


class _UserResponses:
    """Linear responses of (Q, r, s) to each svec coordinate of one W block.

    The pipeline below svec coordinate -> Hermitian basis direction ->
    margin form -> Taylor maps is linear, so evaluating it on the svec basis
    yields the dense constraint coefficients directly.
    """

    def __init__(self, scenario, user):
        k = scenario.feeds
        emb = 2 * k
        veclen = emb * (emb + 1) // 2
        h = user.channel.estimated
        phase_outer = np.outer(h.conj(), h)
        croot = _cov_sqrt(user, k)
        sigma = user.sigma_rad
        self.q_rows = np.zeros((veclen, k * k))
        self.r_rows = np.zeros((veclen, k))
        self.s_row = np.zeros(veclen)
        basis = np.eye(veclen)
        for a in range(veclen):
            v = hermitian_from_embedding(smat(basis[a], emb))
            z = v * phase_outer
            f1 = taylor_quad_matrix(z.real)
            f2 = taylor_linear_vector(z.imag)
            if croot is None:
                q = sigma**2 * f1
                r = 0.5 * sigma * f2
            else:
                q = sigma**2 * (croot @ f1 @ croot)
                r = 0.5 * sigma * (croot @ f2)
            self.q_rows[a] = q.ravel()
            self.r_rows[a] = r
            self.s_row[a] = z.sum().real
        self.trq_row = self.q_rows[:, :: k + 1].sum(axis=1)  # trace of Q per coord


class OutageProblem:
    """Assembled SOC system of the critical design, penalty-loop compatible."""

    def __init__(self, scenario):
        self.scenario = scenario
        k, m = scenario.feeds, scenario.beams
        for u in scenario.users:
            if u.sigma_rad > SMALL_SIGMA_GUARD_RAD:
                warnings.warn(
                    "phase-error std dev above 15 deg; the second-order "
                    "expansion behind the outage bound degrades",
                    stacklevel=2,
                )
        bld = ConeProgramBuilder()
        self.w_refs = [bld.add_hermitian_psd(k) for _ in range(m)]
        self.row_slack = bld.add_nonneg(len(scenario.users))
        self.feed_slack = bld.add_nonneg(k)
        self.n_sinr_rows = len(scenario.users)
        soc_refs = []
        for idx, user in enumerate(scenario.users):
            resp = _UserResponses(scenario, user)
            betas = margin_scalars(scenario, user)
            mu = mu_from_outage(user.outage_prob)
            g2 = 2.0 * np.sqrt(np.log(1.0 / user.outage_prob))
            r_soc = bld.add_soc(k + 1)  # head x bounds ||r||/sqrt(2)
            q_soc = bld.add_soc(k * k + 1)  # head y bounds mu * ||Q||_F
            soc_refs.append((r_soc, q_soc))
            # Linear row: tr(Q) + sum Z - 2g(x + y) >= sigma0^2.
            terms = [
                (self.w_refs[j], beta * (resp.trq_row + resp.s_row))
                for j, beta in betas.items()
            ]
            terms.append((r_soc, {0: -g2}))
            terms.append((q_soc, {0: -g2}))
            terms.append((self.row_slack, {idx: -1.0}))
            bld.add_eq(terms, scenario.noise_power)
            # SOC coupling rows: tail coordinates equal the linear forms.
            for i in range(k):
                terms = [
                    (self.w_refs[j], -beta * resp.r_rows[:, i] / np.sqrt(2.0))
                    for j, beta in betas.items()
                ]
                terms.append((r_soc, {1 + i: 1.0}))
                bld.add_eq(terms, 0.0)
            for i in range(k * k):
                terms = [
                    (self.w_refs[j], -beta * mu * resp.q_rows[:, i])
                    for j, beta in betas.items()
                ]
                terms.append((q_soc, {1 + i: 1.0}))
                bld.add_eq(terms, 0.0)
        caps = scenario.power_caps
        for kk in range(k):
            e = np.zeros((k, k))
            e[kk, kk] = 1.0
            terms = [(ref, e) for ref in self.w_refs]
            terms.append((self.feed_slack, {kk: 1.0}))
            bld.add_eq(terms, caps[kk])
        self.builder = bld
        self.soc_refs = soc_refs

    def solve(self, objective_matrices=None, options=None):
        from .conic import SolveOptions, solve

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
        if sol.certificate is None:
            return "unknown"
        contrib = sol.certificate * self.builder.rhs_vector
        k = self.scenario.feeds
        outage_w = contrib[:-k].sum()
        feed_w = contrib[-k:].sum()
        return "outage" if outage_w >= feed_w else "per-feed-power"


def soc_row_values(scenario, user, ws):
    """(Q, r, s) of one terminal at numeric W matrices, for bound checking."""
    k = scenario.feeds
    z = margin_matrix(scenario, user, ws)
    croot = _cov_sqrt(user, k)
    f1 = taylor_quad_matrix(z.real)
    f2 = taylor_linear_vector(z.imag)
    if croot is None:
        q = user.sigma_rad**2 * f1
        r = 0.5 * user.sigma_rad * f2
    else:
        q = user.sigma_rad**2 * (croot @ f1 @ croot)
        r = 0.5 * user.sigma_rad * (croot @ f2)
    s = float(z.sum().real) - scenario.noise_power
    return q, r, s


def design_outage(scenario, config: PenaltyConfig | None = None) -> BeamDesign:
    """Full critical design: SOC relaxation, penalty loop, beam extraction."""
    config = config or PenaltyConfig()
    problem = OutageProblem(scenario)
    ws, iterations, gaps, history = run_penalty_loop(problem, config)
    beams = extract_beams(ws, config.rank_gap_tol)
    return BeamDesign(
        beams=beams,
        noise_power=scenario.noise_power,
        lifted=ws,
        algorithm="outage",
        iterations=iterations,
        max_rank_gap=float(np.max(gaps)),
        status="OPTIMAL",
        metadata={
            "gamma_lin": [u.gamma_lin for u in scenario.users],
            "sigma_deg": [np.rad2deg(u.sigma_rad) for u in scenario.users],
            "eta": [u.eta for u in scenario.users],
            "outage_prob": [u.outage_prob for u in scenario.users],
            "cov_root": "symmetric",
            "history": history,
        },
    )
