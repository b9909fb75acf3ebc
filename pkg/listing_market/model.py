"""
Structural equations of the two-platform listing market: expected auction
revenue, potential bidders, website usage, net listing revenue and the seller
indifference condition.

Listings and usage are carried in thousands.
"""
import math
import logging
from enum import Enum
from collections import namedtuple

import numpy as np

from listing_market.exceptions import InvalidInputError, ConfigError

logger = logging.getLogger(__name__)


class Platform(Enum):
    """
    The two auction sites of a market instance
    """
    E = "E"
    Y = "Y"

    @property
    def rival(self):
        return Platform.Y if self is Platform.E else Platform.E


PLATFORMS = (Platform.E, Platform.Y)


class UsageMetric(Enum):
    """
    Website usage measure. One metric is used per analysis run
    """
    UNIQUE_VISITORS = "uv"
    PAGE_VIEWS = "pv"


# `xi` maps Platform to the site factor. xi[E] is 0 by normalisation
RevenueParams = namedtuple("RevenueParams", ["a", "b", "gamma", "xi"])
# `eta` maps Platform to the site preference
UsageParams = namedtuple("UsageParams", ["beta1", "beta2", "c", "eta"])
# Both fields map Platform to a positive float
MarketState = namedtuple("MarketState", ["listings", "usage"])
# Ad valorem rate and insertion fee (dollars) charged by one platform
PlatformFees = namedtuple("PlatformFees", ["alpha", "insertion"])
Calibration = namedtuple("Calibration", ["rev", "use", "metric"])

# Elasticity of expected revenue w.r.t. potential bidders, keyed by
# (alpha bar, metric)
REVENUE_ELASTICITY_ESTIMATES = {
    (0.04, UsageMetric.UNIQUE_VISITORS): 0.0216,
    (0.04, UsageMetric.PAGE_VIEWS): 0.0074,
    (0.033, UsageMetric.UNIQUE_VISITORS): 0.0178,
    (0.033, UsageMetric.PAGE_VIEWS): 0.0061,
    (0.025, UsageMetric.UNIQUE_VISITORS): 0.0134,
    (0.025, UsageMetric.PAGE_VIEWS): 0.0046,
}

# Pooled usage equation estimates (c, beta1, beta2) and R-squared per metric
USAGE_ESTIMATES = {
    UsageMetric.UNIQUE_VISITORS: {"c": 6.564, "beta1": 1.989, "beta2": -1.876,
                                  "r_squared": 0.94},
    UsageMetric.PAGE_VIEWS: {"c": 10.289, "beta1": 4.743, "beta2": -4.718,
                             "r_squared": 0.93},
}


def _require_positive(name, value):
    if not value > 0:
        raise InvalidInputError("{} must be positive, got {}".format(name, value))


def revenue_params(a, b, gamma=1.0, xi_y=0.0):
    """
    Build RevenueParams with the xi[E] = 0 normalisation
    """
    _require_positive("a", a)
    _require_positive("gamma", gamma)
    return RevenueParams(a=float(a), b=float(b), gamma=float(gamma),
                         xi={Platform.E: 0.0, Platform.Y: float(xi_y)})


def usage_params(beta1, beta2, c, eta_e=0.0, eta_y=0.0):
    values = (beta1, beta2, c, eta_e, eta_y)
    if not all(math.isfinite(v) for v in values):
        raise InvalidInputError("Usage parameters must be finite")
    return UsageParams(beta1=float(beta1), beta2=float(beta2), c=float(c),
                       eta={Platform.E: float(eta_e), Platform.Y: float(eta_y)})


def market_state(listings_e, listings_y, usage_e, usage_y):
    """
    Build a MarketState, rejecting non-positive entries (logarithms must exist)
    """
    for name, value in (("eBay listings", listings_e),
                        ("Yahoo listings", listings_y),
                        ("eBay usage", usage_e), ("Yahoo usage", usage_y)):
        _require_positive(name, value)
    return MarketState(
        listings={Platform.E: float(listings_e), Platform.Y: float(listings_y)},
        usage={Platform.E: float(usage_e), Platform.Y: float(usage_y)}
    )


def reference_parameters(metric, alpha_bar=0.04):
    """
    Return (RevenueParams, UsageParams) at the published point estimates for
    `metric`, before residual calibration
    """
    try:
        b = REVENUE_ELASTICITY_ESTIMATES[(alpha_bar, metric)]
    except KeyError:
        raise InvalidInputError(
            "No published elasticity for alpha bar {} and metric '{}'"
            .format(alpha_bar, metric.value)
        )
    est = USAGE_ESTIMATES[metric]
    return (revenue_params(a=1.0, b=b),
            usage_params(est["beta1"], est["beta2"], est["c"]))


def potential_bidders(params, usage, listings):
    """
    N = gamma * U / L
    """
    _require_positive("usage", usage)
    _require_positive("listings", listings)
    return params.gamma * usage / listings


def expected_revenue(params, n_bidders, site):
    """
    R_j = a * N_j^b * exp(xi_j)
    """
    _require_positive("number of potential bidders", n_bidders)
    return params.a * n_bidders ** params.b * math.exp(params.xi[site])


def usage_level(params, own_listings, rival_listings, site):
    """
    U_j = L_j^beta1 * L_-j^beta2 * exp(c + eta_j)
    """
    _require_positive("own listings", own_listings)
    _require_positive("rival listings", rival_listings)
    return (own_listings ** params.beta1 * rival_listings ** params.beta2 *
            math.exp(params.c + params.eta[site]))


def net_listing_revenue(expected_revenue, alpha, insertion_fee):
    """
    (1 - alpha) * R - F. May be negative, in which case no listing occurs
    """
    if not 0 <= alpha < 1:
        raise InvalidInputError(
            "Final value fee rate must be in [0, 1), got {}".format(alpha)
        )
    return (1 - alpha) * expected_revenue - insertion_fee


def induced_state(use, listings_e, listings_y):
    """
    Return the MarketState whose usage is generated by the usage equation at
    the given listings
    """
    return market_state(
        listings_e, listings_y,
        usage_level(use, listings_e, listings_y, Platform.E),
        usage_level(use, listings_y, listings_e, Platform.Y)
    )


def site_net_revenues(state, rev, fees):
    """
    Return a dict mapping Platform to net listing revenue at `state`
    """
    net = {}
    for site in PLATFORMS:
        n = potential_bidders(rev, state.usage[site], state.listings[site])
        revenue = expected_revenue(rev, n, site)
        net[site] = net_listing_revenue(revenue, fees[site].alpha,
                                        fees[site].insertion)
    return net


def indifference_residual(state, rev, use, fees):
    """
    Net listing revenue on eBay minus that on Yahoo. Zero at a listing
    equilibrium. Usage is taken from `state` as given; `use` is accepted so
    callers can pass a full parameter set but does not enter the residual
    """
    net = site_net_revenues(state, rev, fees)
    return net[Platform.E] - net[Platform.Y]


def reduced_form_exponents(rev, use):
    """
    Return the 2x2 matrix of d ln R_j / d ln L_k, rows and columns ordered
    (E, Y): own b(beta1 - 1) on the diagonal, b * beta2 off it
    """
    own = rev.b * (use.beta1 - 1)
    cross = rev.b * use.beta2
    return np.array([[own, cross], [cross, own]])


def calibrate_residuals(observed, rev, use, metric, alpha_bar,
                        median_revenue=None):
    """
    Back out the site residuals so the model reproduces `observed` exactly.

    eta_j is set so usage_level returns the observed usage. xi_Y is set so
    that 1 - alpha_bar = R_Y / R_E holds at the observed usage per listing,
    with xi_E = 0. If `median_revenue` is given, `a` is rescaled so that
    eBay's expected revenue at the observed state equals it.

    Return a Calibration. Calling it again on its own output changes nothing.
    """
    if not 0 < alpha_bar < 1:
        raise InvalidInputError(
            "alpha bar must be in (0, 1), got {}".format(alpha_bar)
        )
    listings = observed.listings
    usage = observed.usage

    eta = {}
    for site in PLATFORMS:
        eta[site] = (math.log(usage[site]) -
                     use.beta1 * math.log(listings[site]) -
                     use.beta2 * math.log(listings[site.rival]) - use.c)
    new_use = use._replace(eta=eta)

    n_e = potential_bidders(rev, usage[Platform.E], listings[Platform.E])
    n_y = potential_bidders(rev, usage[Platform.Y], listings[Platform.Y])
    xi_y = math.log(1 - alpha_bar) - rev.b * (math.log(n_y) - math.log(n_e))
    new_rev = rev._replace(xi={Platform.E: 0.0, Platform.Y: xi_y})
    if median_revenue is not None:
        _require_positive("median revenue", median_revenue)
        new_rev = new_rev._replace(a=median_revenue / n_e ** rev.b)

    logger.debug("Calibrated %s residuals: eta=(%.6g, %.6g) xi_Y=%.6g",
                 metric.value, eta[Platform.E], eta[Platform.Y], xi_y)
    return Calibration(rev=new_rev, use=new_use, metric=metric)


def params_to_config(rev, use):
    """
    Return an ordered list of (key, value) pairs in the flat config format
    """
    return [
        ("rev.a", rev.a),
        ("rev.b", rev.b),
        ("rev.gamma", rev.gamma),
        ("rev.xi.Y", rev.xi[Platform.Y]),
        ("use.beta1", use.beta1),
        ("use.beta2", use.beta2),
        ("use.c", use.c),
        ("use.eta.E", use.eta[Platform.E]),
        ("use.eta.Y", use.eta[Platform.Y]),
    ]


def params_from_config(entries, rev=None, use=None):
    """
    Apply parameter entries (a mapping of flat keys to values) on top of
    `rev` and `use` (defaults: zero-residual unit parameters) and return the
    updated pair. Keys outside the parameter family raise ConfigError
    """
    rev = rev or revenue_params(a=1.0, b=0.0)
    use = use or usage_params(0.0, 0.0, 0.0)
    values = dict(params_to_config(rev, use))
    for key, value in entries.items():
        if key not in values:
            raise ConfigError("Unknown parameter key '{}'".format(key))
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError("Parameter '{}' must be a number, got '{}'"
                              .format(key, value))
    new_rev = revenue_params(values["rev.a"], values["rev.b"],
                             values["rev.gamma"], values["rev.xi.Y"])
    new_use = usage_params(values["use.beta1"], values["use.beta2"],
                           values["use.c"], values["use.eta.E"],
                           values["use.eta.Y"])
    return new_rev, new_use
