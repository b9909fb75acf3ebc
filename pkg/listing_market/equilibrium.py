"""
Listing equilibria of the two-platform market under two closures of total
listing supply, the stability of the listings/usage feedback loop and fee
counterfactuals.

FixedTotal: total listings are fixed and sellers reallocate until net
listing revenue is equal on both sites.

ElasticEntry: listings on each site follow a supply curve
L_j = Lref_j * (NR_j / V)^elasticity around a reference state, where NR_j is
net listing revenue and V an outside option. The dynamics move log-listings
a fraction `damping` of the way towards the supply target every period.
"""
import math
import logging
from collections import namedtuple

import numpy as np

from listing_market.dataset import (LISTINGS_2001, UNIQUE_VISITORS_2001,
                                    PAGE_VIEWS_2001)
from listing_market.exceptions import (InvalidInputError, NoInteriorEquilibriumError,
                                       NoEquilibriumError, InstabilityError,
                                       ConvergenceError, ScenarioError,
                                       EquilibriumError)
from listing_market.fees import (SCHEDULES_2001, YAHOO_FALL_2000, Money,
                                 effective_alpha_bar, scenario_fees)
from listing_market.model import (Platform, PLATFORMS, UsageMetric, market_state,
                                  induced_state, site_net_revenues,
                                  indifference_residual, potential_bidders,
                                  expected_revenue, reduced_form_exponents,
                                  reference_parameters, calibrate_residuals)

logger = logging.getLogger(__name__)

# States further than this factor from the initial state count as diverged
DIVERGENCE_LOG_BOUND = math.log(1e12)
MAX_BISECTIONS = 200

FIXED_TOTAL = "fixed-total"
ELASTIC_ENTRY = "elastic-entry"

FixedTotal = namedtuple("FixedTotal", ["total_listings", "initial_share"],
                        defaults=(None,))
ElasticEntry = namedtuple("ElasticEntry",
                          ["outside_option", "reference", "elasticity"],
                          defaults=(1.0,))

SolverSettings = namedtuple(
    "SolverSettings", ["tolerance", "damping", "grid_points", "max_periods"],
    defaults=(1e-10, 0.2, 512, 10000)
)

StabilityReport = namedtuple("StabilityReport", [
    "own_exponent", "reallocation_exponent", "feedback_sign", "map_matrix",
    "map_spectral_radius", "damped_spectral_radius", "classification", "label",
    "share_slope"
], defaults=(None,))

# `residual` is a float for FixedTotal and a dict of per-site log gaps for
# ElasticEntry
EquilibriumSolution = namedtuple("EquilibriumSolution", [
    "state", "residual", "roots", "stability", "closure", "periods"
])

Trajectory = namedtuple("Trajectory", ["states", "converged", "periods",
                                       "diverged"])

Counterfactual = namedtuple("Counterfactual", [
    "before", "after", "listing_deltas", "usage_deltas", "share_delta",
    "closure"
])


class EquilibriumProblem(namedtuple("EquilibriumProblem", [
        "rev", "use", "fees", "closure", "metric"])):
    """
    A fully parameterised market. `fees` maps Platform to PlatformFees
    """
    __slots__ = ()

    def __new__(cls, rev, use, fees, closure, metric):
        for site in PLATFORMS:
            if not 0 <= fees[site].alpha < 1:
                raise InvalidInputError(
                    "Final value fee rate of {} must be in [0, 1), got {}"
                    .format(site.value, fees[site].alpha)
                )
        if isinstance(closure, FixedTotal):
            if not closure.total_listings > 0:
                raise InvalidInputError("Total listings must be positive")
            if closure.initial_share is not None and \
                    not 0 < closure.initial_share < 1:
                raise InvalidInputError("Initial share must be in (0, 1)")
        elif isinstance(closure, ElasticEntry):
            if not closure.outside_option > 0:
                raise InvalidInputError("Outside option must be positive")
            if not closure.elasticity > 0:
                raise InvalidInputError("Supply elasticity must be positive")
        else:
            raise InvalidInputError("Unknown closure {!r}".format(closure))
        return super().__new__(cls, rev, use, fees, closure, metric)

    @property
    def closure_label(self):
        if isinstance(self.closure, FixedTotal):
            return FIXED_TOTAL
        return ELASTIC_ENTRY


def share_listings(total, share):
    """
    Split `total` into (L_E, L_Y) at eBay share `share` so that the two parts
    sum to `total` exactly
    """
    if share >= 0.5:
        listings_e = share * total
        return listings_e, total - listings_e
    listings_y = (1 - share) * total
    return total - listings_y, listings_y


def share_residual(problem, share):
    """
    Indifference residual at eBay share `share` of the fixed total, with
    usage induced by the usage equation
    """
    listings_e, listings_y = share_listings(problem.closure.total_listings, share)
    state = induced_state(problem.use, listings_e, listings_y)
    return indifference_residual(state, problem.rev, problem.use, problem.fees)


def _bisect(problem, lo, hi, g_lo, tolerance):
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        g_mid = share_residual(problem, mid)
        if abs(g_mid) < tolerance:
            return mid
        if mid in (lo, hi):
            break
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    raise ConvergenceError(
        "Bisection did not reach tolerance {} in [{}, {}]"
        .format(tolerance, lo, hi)
    )


def solve_fixed_total(problem, tolerance=1e-10, grid_points=512):
    """
    Find every eBay share on a uniform grid over (0.001, 0.999) at which the
    indifference residual changes sign, refine each by bisection, and return
    an EquilibriumSolution designating the root nearest the closure's initial
    share (the lowest root if none is given)
    """
    if not isinstance(problem.closure, FixedTotal):
        raise InvalidInputError("solve_fixed_total needs a FixedTotal closure")
    if grid_points < 16:
        raise InvalidInputError("Need at least 16 grid points, got {}"
                                .format(grid_points))

    grid = np.linspace(0.001, 0.999, grid_points)
    residuals = [share_residual(problem, s) for s in grid]

    found = []
    for i, (s, g) in enumerate(zip(grid, residuals)):
        if g == 0:
            found.append(float(s))
        elif i + 1 < len(grid) and g * residuals[i + 1] < 0:
            logger.debug("Sign change between shares %.6g and %.6g",
                         s, grid[i + 1])
            found.append(_bisect(problem, float(s), float(grid[i + 1]), g,
                                 tolerance))
    if not found:
        raise NoInteriorEquilibriumError(residuals[0], residuals[-1])

    found.sort()
    shares = [found[0]]
    for s in found[1:]:
        if s - shares[-1] < 1e-9:
            logger.warning("Merging duplicate equilibrium roots at share %.9g",
                           s)
            continue
        shares.append(s)

    total = problem.closure.total_listings
    roots = [induced_state(problem.use, *share_listings(total, s))
             for s in shares]
    designated = 0
    if problem.closure.initial_share is not None:
        distances = [abs(s - problem.closure.initial_share) for s in shares]
        designated = distances.index(min(distances))

    state = roots[designated]
    residual = share_residual(problem, shares[designated])
    solution = EquilibriumSolution(state=state, residual=residual, roots=roots,
                                   stability=None, closure=FIXED_TOTAL,
                                   periods=0)
    return solution._replace(stability=stability_analysis(problem, solution))


def supply_targets(problem, state):
    """
    Return a dict mapping Platform to the log-listings target of the supply
    curve at `state`
    """
    closure = problem.closure
    net = site_net_revenues(state, problem.rev, problem.fees)
    targets = {}
    for site in PLATFORMS:
        if net[site] <= 0:
            raise NoEquilibriumError(
                "Net listing revenue on {} is {:.6g} against a positive "
                "outside option {:.6g}".format(site.value, net[site],
                                               closure.outside_option)
            )
        targets[site] = (math.log(closure.reference.listings[site]) +
                         closure.elasticity *
                         (math.log(net[site]) - math.log(closure.outside_option)))
    return targets


def iterate_dynamics(problem, initial, damping=0.2, max_periods=10000,
                     tolerance=1e-10):
    """
    Run the damped entry dynamics from the listings of `initial` and return
    the Trajectory. Usage is recomputed from the usage equation every
    period. The run stops when every log gap to the supply target is below
    `tolerance` (checked before stepping), after `max_periods` steps, or when
    any log-listing moves more than a factor 1e12 from its initial value, in
    which case the trajectory is flagged as diverged
    """
    if not isinstance(problem.closure, ElasticEntry):
        raise InvalidInputError("Dynamics need an ElasticEntry closure")
    if not 0 < damping <= 1:
        raise InvalidInputError("Damping must be in (0, 1], got {}"
                                .format(damping))

    start = np.array([math.log(initial.listings[s]) for s in PLATFORMS])
    log_l = start.copy()
    state = induced_state(problem.use, *np.exp(log_l))
    states = [state]
    for period in range(max_periods + 1):
        targets = supply_targets(problem, state)
        gap = np.array([targets[s] for s in PLATFORMS]) - log_l
        if np.max(np.abs(gap)) < tolerance:
            logger.debug("Dynamics converged after %d periods", period)
            return Trajectory(states, True, period, False)
        if period == max_periods:
            break
        log_l = log_l + damping * gap
        if np.max(np.abs(log_l - start)) > DIVERGENCE_LOG_BOUND:
            logger.debug("Dynamics diverged after %d periods", period + 1)
            return Trajectory(states, False, period + 1, True)
        state = induced_state(problem.use, *np.exp(log_l))
        states.append(state)
    logger.debug("Dynamics stopped after %d periods", max_periods)
    return Trajectory(states, False, max_periods, False)


def solve_elastic_entry(problem, tolerance=1e-10, initial=None, damping=0.2,
                        max_periods=10000):
    """
    Solve an ElasticEntry problem by damped iteration from `initial`
    (default: the closure's reference state)
    """
    if initial is None:
        initial = problem.closure.reference
    trajectory = iterate_dynamics(problem, initial, damping, max_periods,
                                  tolerance)
    if trajectory.diverged:
        raise InstabilityError(
            "Listing dynamics diverged after {} periods (unstable feedback)"
            .format(trajectory.periods), trajectory
        )
    if not trajectory.converged:
        raise ConvergenceError("Listing dynamics did not converge in {} periods"
                               .format(max_periods))

    state = trajectory.states[-1]
    targets = supply_targets(problem, state)
    gaps = {s: targets[s] - math.log(state.listings[s]) for s in PLATFORMS}
    solution = EquilibriumSolution(state=state, residual=gaps, roots=[state],
                                   stability=None, closure=ELASTIC_ENTRY,
                                   periods=trajectory.periods)
    return solution._replace(stability=stability_at(problem, state, damping))


def stability_at(problem, state, damping=0.2):
    """
    Linearise the entry dynamics at `state` and return a StabilityReport.

    The undamped map is elasticity * diag(w) * M with
    w_j = (1 - alpha_j) R_j / NR_j and M the reduced-form exponents. A
    FixedTotal problem is analysed with unit elasticity and classified from
    the slope of the net revenue gap in the eBay share: sellers move to the
    site that nets more, so a rising gap makes the root a tipping point.
    """
    elasticity = getattr(problem.closure, "elasticity", 1.0)
    exponents = reduced_form_exponents(problem.rev, problem.use)
    weights = []
    gross = {}
    for site in PLATFORMS:
        n = potential_bidders(problem.rev, state.usage[site],
                              state.listings[site])
        gross[site] = (1 - problem.fees[site].alpha) * \
            expected_revenue(problem.rev, n, site)
        net = gross[site] - problem.fees[site].insertion
        if net > 0:
            weights.append(gross[site] / net)
        else:
            logger.warning("Net listing revenue on %s is not positive; its "
                           "supply does not respond", site.value)
            weights.append(0.0)
    jacobian = elasticity * np.diag(weights) @ exponents
    radius = float(np.max(np.abs(np.linalg.eigvals(jacobian))))
    damped = (1 - damping) * np.eye(2) + damping * jacobian
    damped_radius = float(np.max(np.abs(np.linalg.eigvals(damped))))

    own = float(exponents[0, 0])
    sign = "positive" if own > 0 else "negative" if own < 0 else "no"
    slope = None
    if isinstance(problem.closure, FixedTotal):
        slope = share_slope(gross, exponents, listing_share(state))
        if abs(slope) <= 1e-12 * max(abs(v) for v in gross.values()):
            classification = "neutral"
        elif slope < 0:
            classification = "stable"
        else:
            classification = "unstable (tipping point)"
    elif np.allclose(jacobian, 0.0, rtol=0.0, atol=1e-15):
        classification = "neutral"
    elif radius < 1:
        classification = "stable"
    else:
        classification = "unstable"

    return StabilityReport(
        own_exponent=own,
        reallocation_exponent=float(exponents[0, 0] - exponents[0, 1]),
        feedback_sign=sign,
        map_matrix=jacobian,
        map_spectral_radius=radius,
        damped_spectral_radius=damped_radius,
        classification=classification,
        label="{} feedback, {}".format(sign, classification),
        share_slope=slope
    )


def share_slope(gross, exponents, share):
    """
    d/ds of NR_E - NR_Y with total listings held fixed, where d ln L_E/ds is
    1/s and d ln L_Y/ds is -1/(1 - s)
    """
    d_log = np.array([1 / share, -1 / (1 - share)])
    d_revenue = exponents @ d_log
    return float(gross[Platform.E] * d_revenue[0] -
                 gross[Platform.Y] * d_revenue[1])


def stability_analysis(problem, solution, damping=0.2):
    return stability_at(problem, solution.state, damping)


def listing_share(state):
    return state.listings[Platform.E] / (state.listings[Platform.E] +
                                         state.listings[Platform.Y])


def root_residuals(problem, solution):
    """
    Return (shares, residuals) for every root of a solution: the
    indifference residual for FixedTotal, the largest absolute log gap to the
    supply target for ElasticEntry
    """
    shares = [listing_share(root) for root in solution.roots]
    if isinstance(problem.closure, FixedTotal):
        residuals = [indifference_residual(root, problem.rev, problem.use,
                                           problem.fees)
                     for root in solution.roots]
    else:
        residuals = [max(abs(g) for g in solution.residual.values())]
    return shares, residuals


def log_distances(trajectory, state):
    """
    Euclidean distance in log-listings of every trajectory state to `state`
    """
    anchor = np.log([state.listings[s] for s in PLATFORMS])
    return [float(np.linalg.norm(np.log([st.listings[s] for s in PLATFORMS]) -
                                 anchor))
            for st in trajectory.states]


def solve(problem, settings=SolverSettings(), initial=None):
    """
    Solve `problem` with the solver matching its closure
    """
    if isinstance(problem.closure, FixedTotal):
        return solve_fixed_total(problem, settings.tolerance,
                                 settings.grid_points)
    return solve_elastic_entry(problem, settings.tolerance, initial,
                               settings.damping, settings.max_periods)


def counterfactual_compare(base, modified_fees, settings=SolverSettings()):
    """
    Solve `base` and the same problem with `modified_fees` and report the
    signed changes (after minus before) of listings, usage and eBay share
    """
    scenarios = {}
    for label, problem in (("before", base),
                           ("after", base._replace(fees=modified_fees))):
        try:
            scenarios[label] = solve(problem, settings)
        except EquilibriumError as ex:
            raise ScenarioError(label, ex)
        if scenarios[label].stability.classification.startswith("unstable"):
            logger.warning("The %s root is %s", label,
                           scenarios[label].stability.classification)

    before = scenarios["before"].state
    after = scenarios["after"].state

    def share(state):
        return state.listings[Platform.E] / sum(state.listings.values())

    return Counterfactual(
        before=scenarios["before"],
        after=scenarios["after"],
        listing_deltas={s: after.listings[s] - before.listings[s]
                        for s in PLATFORMS},
        usage_deltas={s: after.usage[s] - before.usage[s] for s in PLATFORMS},
        share_delta=share(after) - share(before),
        closure=base.closure_label
    )


def observed_state_2001(metric):
    usage = {UsageMetric.UNIQUE_VISITORS: UNIQUE_VISITORS_2001,
             UsageMetric.PAGE_VIEWS: PAGE_VIEWS_2001}[metric]
    return market_state(LISTINGS_2001[Platform.E], LISTINGS_2001[Platform.Y],
                        usage[Platform.E], usage[Platform.Y])


def calibrated_problem(metric=UsageMetric.UNIQUE_VISITORS, closure=FIXED_TOTAL,
                       elasticity=1.0, opening=Money(1500), closing=Money(5000),
                       schedules=None, rev=None, use=None):
    """
    Build the 2001 market: published point estimates (alpha bar 0.04 row)
    unless `rev`/`use` are given, fees of `schedules` (default: 2001) at the
    median scenario, and residuals calibrated so that the observed 2001
    weekly averages are an exact equilibrium with eBay's expected revenue
    equal to the closing value
    """
    schedules = schedules or SCHEDULES_2001
    ref_rev, ref_use = reference_parameters(metric, 0.04)
    rev = rev or ref_rev
    use = use or ref_use

    observed = observed_state_2001(metric)
    fees = scenario_fees(schedules.values(), opening, closing)
    alpha_bar = float(effective_alpha_bar(opening, closing,
                                          schedules[Platform.E],
                                          schedules[Platform.Y]))
    calibration = calibrate_residuals(observed, rev, use, metric, alpha_bar,
                                      median_revenue=float(closing.dollars))

    if closure == FIXED_TOTAL:
        total = sum(observed.listings.values())
        closure_value = FixedTotal(total_listings=total,
                                   initial_share=observed.listings[Platform.E] / total)
    elif closure == ELASTIC_ENTRY:
        net = site_net_revenues(observed, calibration.rev, fees)
        closure_value = ElasticEntry(outside_option=net[Platform.E],
                                     reference=observed, elasticity=elasticity)
    else:
        raise InvalidInputError("Unknown closure '{}'".format(closure))

    return EquilibriumProblem(calibration.rev, calibration.use, fees,
                              closure_value, metric)


def fall_2000_fees(opening=Money(1500), closing=Money(5000)):
    """
    Per-platform fees at the median scenario before Yahoo!Auctions began
    charging. eBay's 2001 schedule is kept
    """
    return scenario_fees([SCHEDULES_2001[Platform.E], YAHOO_FALL_2000],
                         opening, closing)
