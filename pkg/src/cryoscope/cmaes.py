"""Covariance-matrix-adaptation evolution strategy, (mu/mu_w, lambda).

Textbook implementation with rank-one and rank-mu covariance updates
and cumulative step-size adaptation.  All randomness flows from one
seeded generator, the eigendecomposition is refreshed every generation,
and candidate ranking uses a stable sort, so a given seed reproduces
the trajectory bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class CmaResult:
    x_best: np.ndarray
    f_best: float
    history: np.ndarray  # best-so-far objective after each generation
    evaluations: int
    converged: bool  # reached ftarget before the budget ran out


def minimize_cmaes(
    objective,
    x0,
    sigma0: float,
    budget: int,
    seed: int = 0,
    popsize: int | None = None,
    ftarget: float | None = None,
) -> CmaResult:
    """Minimize ``objective`` starting from ``x0`` with step size ``sigma0``.

    Runs until ``budget`` evaluations are spent or the best value drops
    below ``ftarget``.  Returns the best candidate ever evaluated.
    """
    mean = np.asarray(x0, dtype=float).copy()
    n = mean.size
    if budget < 1:
        raise ValueError("budget must be at least one evaluation")
    lam = popsize if popsize is not None else 4 + int(3 * np.log(n))
    mu = lam // 2
    weights = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    weights /= weights.sum()
    mu_eff = 1.0 / np.sum(weights**2)

    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0)
    d_sigma = 1.0 + 2.0 * max(0.0, np.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma
    c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n)
    c_1 = 2.0 / ((n + 1.3) ** 2 + mu_eff)
    c_mu = min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) ** 2 + mu_eff))
    chi_n = np.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n**2))

    rng = np.random.default_rng(seed)
    sigma = float(sigma0)
    cov = np.eye(n)
    p_sigma = np.zeros(n)
    p_c = np.zeros(n)

    x_best = mean.copy()
    f_best = np.inf
    history = []
    evals = 0
    converged = False

    while evals < budget and not converged:
        eigvals, eigvecs = np.linalg.eigh(cov)
        eigvals = np.maximum(eigvals, 1e-20)
        d = np.sqrt(eigvals)

        n_samples = min(lam, budget - evals)
        z = rng.standard_normal((n_samples, n))
        y = z @ (eigvecs * d).T  # y ~ N(0, C)
        candidates = mean + sigma * y
        fitness = np.array([objective(c) for c in candidates])
        evals += n_samples

        order = np.argsort(fitness, kind="stable")
        if fitness[order[0]] < f_best:
            f_best = float(fitness[order[0]])
            x_best = candidates[order[0]].copy()
        history.append(f_best)
        if ftarget is not None and f_best <= ftarget:
            converged = True
        if n_samples < mu:
            break  # budget too small for a full update

        y_sel = y[order[:mu]]
        y_w = weights @ y_sel
        mean = mean + sigma * y_w

        # step-size path uses C^(-1/2) * y_w
        c_inv_half = eigvecs @ np.diag(1.0 / d) @ eigvecs.T
        p_sigma = (1.0 - c_sigma) * p_sigma + np.sqrt(
            c_sigma * (2.0 - c_sigma) * mu_eff
        ) * (c_inv_half @ y_w)
        gens_done = len(history)
        h_sigma = float(
            np.linalg.norm(p_sigma)
            / np.sqrt(1.0 - (1.0 - c_sigma) ** (2.0 * gens_done))
            < (1.4 + 2.0 / (n + 1.0)) * chi_n
        )
        p_c = (1.0 - c_c) * p_c + h_sigma * np.sqrt(c_c * (2.0 - c_c) * mu_eff) * y_w

        delta_h = (1.0 - h_sigma) * c_c * (2.0 - c_c)
        rank_mu = (y_sel * weights[:, None]).T @ y_sel
        cov = (
            (1.0 - c_1 - c_mu) * cov
            + c_1 * (np.outer(p_c, p_c) + delta_h * cov)
            + c_mu * rank_mu
        )
        cov = 0.5 * (cov + cov.T)

        sigma *= np.exp((c_sigma / d_sigma) * (np.linalg.norm(p_sigma) / chi_n - 1.0))

    return CmaResult(
        x_best=x_best,
        f_best=f_best,
        history=np.asarray(history),
        evaluations=evals,
        converged=converged,
    )
