"""
Ordinary least squares estimation of the revenue elasticity and the website
usage equation from a weekly panel.
"""
import logging
from collections import namedtuple

import numpy as np
from tqdm import tqdm

from listing_market.dataset import complete_weeks, metric_value, synthesize_panel
from listing_market.exceptions import (InvalidInputError, SingularDesignError,
                                       InsufficientDataError)
from listing_market.model import (Platform, PLATFORMS, UsageMetric,
                                   revenue_params, potential_bidders)

logger = logging.getLogger(__name__)

CONDITION_WARNING = 1e8

_OlsFit = namedtuple("OlsFit", [
    "coefficients", "standard_errors", "r_squared", "n_observations",
    "residuals", "design_labels", "condition_number"
])


class OlsFit(_OlsFit):
    """
    Result of an OLS regression. `coefficients`, `standard_errors` and
    `residuals` are numpy arrays; `r_squared` is None for fits without an
    intercept
    """
    __slots__ = ()

    def coefficient(self, label):
        return float(self.coefficients[self.design_labels.index(label)])

    def standard_error(self, label):
        return float(self.standard_errors[self.design_labels.index(label)])


CoverageReport = namedtuple("CoverageReport", [
    "replications", "width", "truth", "coverage", "mean_estimates",
    "mean_standard_errors"
])


def ols(design, response, include_intercept=True, labels=None):
    """
    Regress `response` on the columns of `design` (an n x k array, or a
    vector for a single regressor). The intercept, when included, is the
    first coefficient and is labelled 'const' unless `labels` has k + 1
    entries.

    Standard errors are classical: sigma^2 (X'X)^-1 with sigma^2 = RSS/(n-k).
    """
    x = np.asarray(design, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    y = np.asarray(response, dtype=float)
    if x.shape[0] != y.shape[0]:
        raise InvalidInputError("Design has {} rows but response has {} values"
                                .format(x.shape[0], y.shape[0]))

    labels = list(labels) if labels else ["x{}".format(i + 1)
                                          for i in range(x.shape[1])]
    if include_intercept:
        x = np.column_stack([np.ones(x.shape[0]), x])
        if len(labels) == x.shape[1] - 1:
            labels = ["const"] + labels
    if len(labels) != x.shape[1]:
        raise InvalidInputError("Expected {} labels, got {}"
                                .format(x.shape[1], len(labels)))

    n, k = x.shape
    if n <= k:
        raise InsufficientDataError(
            "Need more observations than regressors: n = {}, k = {}"
            .format(n, k)
        )
    rank = np.linalg.matrix_rank(x)
    if rank < k:
        raise SingularDesignError(
            "Design columns ({}) are collinear: rank {} < {}"
            .format(", ".join(collinear_columns(x, labels, rank)), rank, k)
        )

    coefficients = np.linalg.lstsq(x, y, rcond=None)[0]
    xtx = x.T @ x
    condition_number = float(np.linalg.cond(xtx))
    if condition_number > CONDITION_WARNING:
        logger.warning("Normal equations are ill-conditioned (condition number "
                       "%.3g)", condition_number)

    residuals = y - x @ coefficients
    rss = float(residuals @ residuals)
    sigma2 = rss / (n - k)
    covariance = sigma2 * np.linalg.inv(xtx)
    standard_errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))

    r_squared = None
    if include_intercept:
        centred = y - y.mean()
        tss = float(centred @ centred)
        if tss > 0:
            r_squared = 1.0 - rss / tss

    return OlsFit(coefficients=coefficients, standard_errors=standard_errors,
                  r_squared=r_squared, n_observations=n, residuals=residuals,
                  design_labels=labels, condition_number=condition_number)


def estimate_revenue_elasticity(panel, alpha_bar, metric, gamma=1.0):
    """
    Fit -ln(1 - alpha_bar) = b x_t without intercept, where
    x_t = ln(N_E,t / N_Y,t) over the weeks complete for `metric`
    """
    if not 0 < alpha_bar < 1:
        raise InvalidInputError("alpha bar must be in (0, 1), got {}"
                                .format(alpha_bar))
    restricted = complete_weeks(panel, metric)
    weeks = restricted.weeks()
    if len(weeks) < 2:
        raise InsufficientDataError(
            "Need at least 2 complete weeks for metric '{}', got {}"
            .format(metric.value, len(weeks))
        )

    params = revenue_params(a=1.0, b=0.0, gamma=gamma)
    regressor = []
    for week in weeks:
        n = {}
        for site in PLATFORMS:
            obs = restricted.get(week, site)
            n[site] = potential_bidders(params, metric_value(obs, metric),
                                        obs.listings)
        regressor.append(np.log(n[Platform.E] / n[Platform.Y]))

    response = np.full(len(weeks), -np.log1p(-alpha_bar))
    fit = ols(regressor, response, include_intercept=False, labels=["b"])
    logger.debug("Revenue elasticity (%s, alpha bar %s): %.6g",
                 metric.value, alpha_bar, fit.coefficient("b"))
    return fit


def collinear_columns(x, labels, rank):
    """
    Labels of the columns that carry weight in the null space of `x`
    """
    null_space = np.linalg.svd(x)[2][rank:]
    return [label for label, weights in zip(labels, null_space.T)
            if np.max(np.abs(weights)) > 1e-8]


def usage_design(panel, metric):
    """
    Return (design, response) of the pooled usage regression over the weeks
    complete for `metric`: one row per (week, site) with columns
    ln L_own, ln L_rival and response ln U
    """
    restricted = complete_weeks(panel, metric)
    design = []
    response = []
    for week in restricted.weeks():
        for site in PLATFORMS:
            own = restricted.get(week, site)
            rival = restricted.get(week, site.rival)
            design.append([np.log(own.listings), np.log(rival.listings)])
            response.append(np.log(metric_value(own, metric)))
    return np.array(design).reshape(-1, 2), np.array(response)


def estimate_usage_equation(panel, metric):
    """
    Pooled OLS of ln U_j on ln L_j and ln L_-j with a common intercept.
    Coefficients are ordered (c, beta1, beta2)
    """
    design, response = usage_design(panel, metric)
    if len(response) < 4:
        raise InsufficientDataError(
            "Need at least 4 pooled observations for metric '{}', got {}"
            .format(metric.value, len(response))
        )
    fit = ols(design, response, include_intercept=True,
              labels=["c", "beta1", "beta2"])
    logger.debug("Usage equation (%s): %s", metric.value,
                 dict(zip(fit.design_labels, fit.coefficients.tolist())))
    return fit


def monte_carlo_coverage(use, listings, noise_sd, replications, seed,
                         width=3.0, progress=False):
    """
    Re-estimate the usage equation on `replications` synthetic panels and
    report, per coefficient, the share of replications whose
    +/- `width` standard error interval covers the true value.

    Site preferences must be equal across sites; their common value is part
    of the true intercept.
    """
    if replications < 1:
        raise InvalidInputError("Need at least one replication")
    if use.eta[Platform.E] != use.eta[Platform.Y]:
        raise InvalidInputError("Coverage needs equal site preferences")
    truth = np.array([use.c + use.eta[Platform.E], use.beta1, use.beta2])

    children = np.random.SeedSequence(seed).spawn(replications)
    covered = np.zeros(3)
    estimates = np.zeros((replications, 3))
    errors = np.zeros((replications, 3))
    for i in tqdm(range(replications), desc="Monte Carlo", disable=not progress):
        panel = synthesize_panel(use, listings, noise_sd, children[i])
        fit = estimate_usage_equation(panel, panel_metric(panel))
        estimates[i] = fit.coefficients
        errors[i] = fit.standard_errors
        covered += np.abs(fit.coefficients - truth) <= width * fit.standard_errors

    labels = ["c", "beta1", "beta2"]
    return CoverageReport(
        replications=replications,
        width=width,
        truth=dict(zip(labels, truth.tolist())),
        coverage=dict(zip(labels, (covered / replications).tolist())),
        mean_estimates=dict(zip(labels, estimates.mean(axis=0).tolist())),
        mean_standard_errors=dict(zip(labels, errors.mean(axis=0).tolist()))
    )


def panel_metric(panel):
    """
    Return the usage metric present in a synthetic panel
    """
    for obs in panel:
        if obs.unique_visitors is not None:
            return UsageMetric.UNIQUE_VISITORS
        if obs.page_views is not None:
            return UsageMetric.PAGE_VIEWS
    raise InvalidInputError("Panel has no usage data")


def fit_rows(fit):
    """
    Return rows (term, estimate, std_error) of a fit
    """
    return [(label, float(est), float(se)) for label, est, se in
            zip(fit.design_labels, fit.coefficients, fit.standard_errors)]
