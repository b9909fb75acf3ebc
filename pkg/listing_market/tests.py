import math
from decimal import Decimal

import pytest
import numpy as np

from listing_market import fees
from listing_market.fees import (Money, EBAY_2001, YAHOO_2001, YAHOO_FALL_2000,
                                 insertion_fee, final_value_fee,
                                 final_value_fee_exact, total_fee,
                                 effective_alpha_bar, implied_closing_value,
                                 parse_money, load_schedules, schedule_entries,
                                 scenario_fees, format_dollars)
from listing_market.config import parse_config, resolve_config
from listing_market.dataset import (WeeklyObservation, Panel, parse_panel,
                                    serialize_panel, complete_weeks,
                                    summary_stats, synthesize_panel,
                                    canonical_panel)
from listing_market.econometrics import (ols, estimate_revenue_elasticity,
                                         estimate_usage_equation,
                                         monte_carlo_coverage)
from listing_market.equilibrium import (FixedTotal, ElasticEntry,
                                        EquilibriumProblem,
                                        solve_fixed_total, solve_elastic_entry,
                                        iterate_dynamics, stability_at,
                                        counterfactual_compare,
                                        calibrated_problem, fall_2000_fees,
                                        observed_state_2001, listing_share,
                                        log_distances, share_residual,
                                        FIXED_TOTAL, ELASTIC_ENTRY)
from listing_market.exceptions import (InvalidInputError, NoSolutionError,
                                       PanelParseError, ConfigError,
                                       SingularDesignError,
                                       InsufficientDataError,
                                       NoInteriorEquilibriumError,
                                       NoEquilibriumError, InstabilityError,
                                       ScenarioError)
from listing_market.model import (Platform, UsageMetric, PlatformFees,
                                  revenue_params, usage_params, market_state,
                                  potential_bidders, expected_revenue,
                                  usage_level, net_listing_revenue,
                                  indifference_residual, induced_state,
                                  reduced_form_exponents, calibrate_residuals,
                                  reference_parameters, site_net_revenues,
                                  params_to_config, params_from_config)
from listing_market.reporting import ReportBuilder, Table, fit_table
from listing_market.script import run

E = Platform.E
Y = Platform.Y
UV = UsageMetric.UNIQUE_VISITORS
PV = UsageMetric.PAGE_VIEWS


def dollars(string):
    return parse_money(string)


def random_listings(seed, weeks, scale=(100.0, 50.0), sd=0.3):
    """
    Weekly listing paths with enough variation to identify the usage equation
    """
    rng = np.random.default_rng(seed)
    return {E: scale[0] * np.exp(rng.normal(0, sd, weeks)),
            Y: scale[1] * np.exp(rng.normal(0, sd, weeks))}


def symmetric_problem(alpha_e=0.03, alpha_y=0.03, total=200.0):
    rev = revenue_params(a=50.0, b=0.05)
    use = usage_params(0.5, 0.2, 0.0)
    problem_fees = {E: PlatformFees(alpha_e, 0.5), Y: PlatformFees(alpha_y, 0.5)}
    return EquilibriumProblem(rev, use, problem_fees,
                              FixedTotal(total, 0.5), UV)


class TestFeeEngine(object):

    def test_insertion_fee_brackets(self):
        """
        Every bracket fee on both platforms, checked at both ends of the
        bracket
        """
        brackets = [("0.01", "9.99"), ("10.00", "24.99"), ("25.00", "49.99"),
                    ("50.00", "199.99"), ("200.00", "5000.00")]
        ebay = [30, 55, 110, 220, 330]
        yahoo = [20, 35, 75, 150, 150]
        for (low, high), e_fee, y_fee in zip(brackets, ebay, yahoo):
            for value in (low, high):
                assert insertion_fee(EBAY_2001, dollars(value)) == Money(e_fee)
                assert insertion_fee(YAHOO_2001, dollars(value)) == Money(y_fee)

    def test_insertion_fee_examples(self):
        assert insertion_fee(EBAY_2001, dollars("5.00")) == Money(30)
        assert insertion_fee(YAHOO_2001, dollars("10.00")) == Money(35)
        assert insertion_fee(EBAY_2001, dollars("250.00")) == Money(330)

    def test_insertion_fee_minimum(self):
        with pytest.raises(InvalidInputError) as excinfo:
            insertion_fee(EBAY_2001, Money(0))
        assert "$0.01" in str(excinfo.value)

    def test_insertion_fee_monotone(self):
        previous = Money(0)
        for cents in range(1, 30000, 7):
            e_fee = insertion_fee(EBAY_2001, Money(cents))
            assert e_fee.cents >= previous.cents
            assert e_fee.cents >= insertion_fee(YAHOO_2001, Money(cents)).cents
            previous = e_fee

    def test_final_value_fee(self):
        assert final_value_fee_exact(EBAY_2001, dollars("50.00")) == Decimal("1.875")
        assert final_value_fee_exact(EBAY_2001, dollars("100.00")) == Decimal("3.125")
        assert final_value_fee_exact(EBAY_2001, dollars("2000.00")) == Decimal("38.125")
        assert final_value_fee_exact(YAHOO_2001, dollars("50.00")) == 0

        # Rounded half-up to the cent
        assert final_value_fee(EBAY_2001, dollars("50.00")) == Money(188)
        assert final_value_fee(EBAY_2001, dollars("100.00")) == Money(313)
        assert final_value_fee(YAHOO_2001, dollars("50.00")) == Money(0)

    def test_final_value_fee_slopes(self):
        """
        The fee is marginal: slopes either side of $25 and $1000 are the
        adjacent tier rates
        """
        def step(cents):
            return (final_value_fee_exact(EBAY_2001, Money(cents + 1)) -
                    final_value_fee_exact(EBAY_2001, Money(cents)))

        assert step(2499) == Decimal("0.0005")
        assert step(2500) == Decimal("0.00025")
        assert step(99999) == Decimal("0.00025")
        assert step(100000) == Decimal("0.000125")

    def test_total_fee(self):
        assert total_fee(EBAY_2001, dollars("15.00"), dollars("50.00")) == Decimal("2.425")
        assert total_fee(YAHOO_2001, dollars("15.00"), dollars("50.00")) == Decimal("0.35")
        assert total_fee(EBAY_2001, dollars("15.00"), dollars("100.00")) == Decimal("3.675")

    def test_total_fee_closing_below_opening(self):
        with pytest.raises(InvalidInputError):
            total_fee(EBAY_2001, dollars("15.00"), dollars("10.00"))

    def test_effective_alpha_bar(self):
        assert effective_alpha_bar(dollars("15.00"), dollars("50.00")) == Decimal("0.0415")
        assert effective_alpha_bar(dollars("15.00"), dollars("100.00")) == Decimal("0.03325")
        assert effective_alpha_bar(dollars("15.00"), dollars("50.00"),
                                   EBAY_2001, EBAY_2001) == 0

        comparison = fees.compare_fees(dollars("15.00"), dollars("50.00"))
        assert comparison.difference == Decimal("2.075")
        comparison = fees.compare_fees(dollars("15.00"), dollars("100.00"))
        assert comparison.difference == Decimal("3.325")

    def test_effective_alpha_bar_decreasing(self):
        opening = dollars("15.00")
        values = [effective_alpha_bar(opening, Money(c))
                  for c in range(1500, 300000, 997)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_implied_closing_value(self):
        opening = dollars("15.00")
        assert implied_closing_value(0.0415, opening) == dollars("50.00")
        assert implied_closing_value(0.03325, opening) == dollars("100.00")
        assert implied_closing_value(Decimal("0.0415"), opening) == dollars("50.00")

    def test_implied_closing_value_round_trip(self):
        opening = dollars("15.00")
        for cents in (1500, 2499, 2500, 7777, 99999, 100000, 123456):
            alpha = effective_alpha_bar(opening, Money(cents))
            assert implied_closing_value(alpha, opening) == Money(cents)

    def test_implied_closing_value_unreachable(self):
        with pytest.raises(NoSolutionError) as excinfo:
            implied_closing_value(0.000001, dollars("15.00"))
        assert "achievable range" in str(excinfo.value)
        with pytest.raises(NoSolutionError):
            implied_closing_value(0.5, dollars("15.00"))

    def test_parse_money(self):
        assert parse_money("15.00") == Money(1500)
        assert parse_money("$9.99") == Money(999)
        assert parse_money("200") == Money(20000)
        for bad in ("1.234", "abc", "-1.00", "nan"):
            with pytest.raises(InvalidInputError):
                parse_money(bad)

    def test_format_dollars(self):
        assert format_dollars(Decimal("2.42500")) == "2.425"
        assert format_dollars(Decimal("0.35")) == "0.35"
        assert format_dollars(Decimal("100")) == "100.00"

    def test_scenario_fees(self):
        result = scenario_fees([EBAY_2001, YAHOO_2001], dollars("15.00"),
                               dollars("50.00"))
        assert result[E].alpha == pytest.approx(0.0375)
        assert result[E].insertion == pytest.approx(0.55)
        assert result[Y] == PlatformFees(0.0, 0.35)

        fall = scenario_fees([YAHOO_FALL_2000], dollars("15.00"),
                             dollars("50.00"))
        assert fall[Y] == PlatformFees(0.0, 0.0)

    def test_load_schedules(self):
        text = "\n".join("{} = {}".format(k, v)
                         for k, v in schedule_entries(EBAY_2001))
        text = "# eBay 2001\n" + text
        assert load_schedules(text) == {E: EBAY_2001}

    def test_load_schedules_counterfactual(self):
        text = "\n".join([
            "insertion.Y.1 = 0.01,24.99,0.10",
            "insertion.Y.2 = 25.00,,0.50",
            "finalvalue.Y.1 = 0,inf,0.01",
        ])
        schedules = load_schedules(text)
        assert list(schedules) == [Y]
        assert insertion_fee(schedules[Y], dollars("30.00")) == Money(50)
        assert final_value_fee_exact(schedules[Y], dollars("50.00")) == Decimal("0.5")

    def test_load_schedules_invalid(self):
        gap = "insertion.E.1 = 0.01,9.99,0.30\ninsertion.E.2 = 10.01,,0.55"
        with pytest.raises(ConfigError):
            load_schedules(gap)
        bounded = "insertion.E.1 = 0.01,9.99,0.30"
        with pytest.raises(ConfigError):
            load_schedules(bounded)
        with pytest.raises(ConfigError):
            load_schedules("insertion.E.1 = 0.01,inf")
        with pytest.raises(ConfigError):
            load_schedules("solver.damping = 0.5")


class TestMarketModel(object):

    def test_potential_bidders(self):
        rev = revenue_params(a=1.0, b=0.0216)
        assert potential_bidders(rev, 6250, 5822) == pytest.approx(1.0735, abs=1e-4)
        assert potential_bidders(rev, 527, 3349) == pytest.approx(0.1574, abs=1e-4)
        assert potential_bidders(rev, 42.0, 42.0) == 1
        with pytest.raises(InvalidInputError):
            potential_bidders(rev, 0, 10)
        with pytest.raises(InvalidInputError):
            potential_bidders(rev, 10, -1)

    def test_expected_revenue(self):
        flat = revenue_params(a=3.0, b=0.0, xi_y=0.2)
        assert expected_revenue(flat, 17.0, Y) == pytest.approx(3.0 * math.exp(0.2))

        rev = revenue_params(a=1.0, b=0.0216)
        ratio = expected_revenue(rev, 0.1574, Y) / expected_revenue(rev, 1.0735, E)
        assert ratio == pytest.approx(0.9594, abs=1e-4)
        assert expected_revenue(rev, 2.0, E) / expected_revenue(rev, 1.0, E) == \
            pytest.approx(1.0151, abs=1e-4)

    def test_expected_revenue_scale(self):
        rev = revenue_params(a=2.5, b=0.37)
        for k in (0.1, 2.0, 7.5):
            ratio = expected_revenue(rev, 3.0 * k, E) / expected_revenue(rev, 3.0, E)
            assert ratio == pytest.approx(k ** 0.37, rel=1e-12)

    def test_usage_level(self):
        flat = usage_params(0.0, 0.0, 1.5)
        assert usage_level(flat, 10.0, 20.0, E) == pytest.approx(math.exp(1.5))

        _, use = reference_parameters(UV)
        assert usage_level(use, 5822, 3349, E) == pytest.approx(5329.6, rel=1e-3)

        symmetric = usage_params(1.2, -0.4, 0.3)
        assert usage_level(symmetric, 8.0, 8.0, Y) == \
            pytest.approx(8.0 ** 0.8 * math.exp(0.3))

    def test_usage_level_scale(self):
        use = usage_params(1.989, -1.876, 6.564)
        base = usage_level(use, 100.0, 60.0, E)
        assert usage_level(use, 300.0, 60.0, E) / base == \
            pytest.approx(3.0 ** 1.989, rel=1e-12)
        assert usage_level(use, 100.0, 180.0, E) / base == \
            pytest.approx(3.0 ** -1.876, rel=1e-12)

    def test_net_listing_revenue(self):
        assert net_listing_revenue(50.0, 0.0415, 0.0) == pytest.approx(47.925)
        assert net_listing_revenue(50.0, 0.0, 0.35) == pytest.approx(49.65)
        assert net_listing_revenue(0.0, 0.1, 0.35) == -0.35
        with pytest.raises(InvalidInputError):
            net_listing_revenue(50.0, 1.0, 0.0)

    def test_market_state_rejects_non_positive(self):
        with pytest.raises(InvalidInputError):
            market_state(10.0, 0.0, 1.0, 1.0)
        with pytest.raises(InvalidInputError):
            market_state(10.0, 5.0, -1.0, 1.0)

    def test_indifference_residual_symmetric(self):
        rev = revenue_params(a=50.0, b=0.05)
        use = usage_params(1.3, -0.4, 0.1)
        state = induced_state(use, 100.0, 100.0)
        equal = {E: PlatformFees(0.04, 0.3), Y: PlatformFees(0.04, 0.3)}
        assert indifference_residual(state, rev, use, equal) == 0

    def test_reduced_form_exponents(self):
        rev, use = reference_parameters(UV)
        exponents = reduced_form_exponents(rev, use)
        assert exponents[0, 0] == pytest.approx(0.0214, abs=1e-4)
        assert exponents[0, 0] > 0
        assert exponents[0, 1] == pytest.approx(0.0216 * -1.876)

        assert not reduced_form_exponents(revenue_params(1.0, 0.0), use).any()
        unit = usage_params(1.0, -0.5, 0.0)
        assert np.diag(reduced_form_exponents(rev, unit)).tolist() == [0.0, 0.0]

    def test_reduced_form_finite_difference(self):
        """
        Numerical derivatives of ln R through N = gamma U / L and the usage
        equation match the analytic exponents
        """
        rev, use = reference_parameters(UV)
        exponents = reduced_form_exponents(rev, use)
        step = 1e-6

        def log_revenue(site, log_e, log_y):
            state = induced_state(use, math.exp(log_e), math.exp(log_y))
            n = potential_bidders(rev, state.usage[site], state.listings[site])
            return math.log(expected_revenue(rev, n, site))

        log_e, log_y = math.log(5822), math.log(3349)
        for row, site in enumerate((E, Y)):
            d_e = (log_revenue(site, log_e + step, log_y) -
                   log_revenue(site, log_e - step, log_y)) / (2 * step)
            d_y = (log_revenue(site, log_e, log_y + step) -
                   log_revenue(site, log_e, log_y - step)) / (2 * step)
            assert d_e == pytest.approx(exponents[row, 0], rel=1e-6)
            assert d_y == pytest.approx(exponents[row, 1], rel=1e-6)

    def test_calibrate_residuals(self):
        rev, use = reference_parameters(UV)
        observed = observed_state_2001(UV)
        calibration = calibrate_residuals(observed, rev, use, UV, 0.04)

        for site, rival in ((E, Y), (Y, E)):
            assert usage_level(calibration.use, observed.listings[site],
                               observed.listings[rival], site) == \
                pytest.approx(observed.usage[site], rel=1e-12)
        assert calibration.use.eta[E] == pytest.approx(0.1593, abs=1e-3)

        n_e = potential_bidders(rev, observed.usage[E], observed.listings[E])
        n_y = potential_bidders(rev, observed.usage[Y], observed.listings[Y])
        xi = calibration.rev.xi
        assert math.log(1 - 0.04) == pytest.approx(
            rev.b * (math.log(n_y) - math.log(n_e)) + xi[Y] - xi[E]
        )
        assert xi[E] == 0

    def test_calibrate_residuals_page_views(self):
        rev, use = reference_parameters(PV)
        calibration = calibrate_residuals(observed_state_2001(PV), rev, use,
                                          PV, 0.04)
        assert calibration.use.eta[E] == pytest.approx(0.43, abs=0.01)
        assert calibration.use.eta[Y] == pytest.approx(-0.43, abs=0.01)

    def test_calibrate_residuals_idempotent(self):
        rev, use = reference_parameters(UV)
        observed = observed_state_2001(UV)
        first = calibrate_residuals(observed, rev, use, UV, 0.0415,
                                    median_revenue=50.0)
        second = calibrate_residuals(observed, first.rev, first.use, UV,
                                     0.0415, median_revenue=50.0)
        assert second.rev.a == pytest.approx(first.rev.a)
        for site in (E, Y):
            assert second.rev.xi[site] == pytest.approx(first.rev.xi[site])
            assert second.use.eta[site] == pytest.approx(first.use.eta[site])

    def test_median_revenue(self):
        rev, use = reference_parameters(UV)
        observed = observed_state_2001(UV)
        calibration = calibrate_residuals(observed, rev, use, UV, 0.0415,
                                          median_revenue=50.0)
        n_e = potential_bidders(calibration.rev, observed.usage[E],
                                observed.listings[E])
        assert expected_revenue(calibration.rev, n_e, E) == pytest.approx(50.0)

    def test_params_config_round_trip(self):
        rev = revenue_params(2.0, 0.03, 1.5, -0.2)
        use = usage_params(1.1, -0.7, 4.0, 0.1, -0.3)
        entries = {k: str(v) for k, v in params_to_config(rev, use)}
        assert params_from_config(entries) == (rev, use)

        new_rev, new_use = params_from_config({"rev.b": "0.5"}, rev, use)
        assert new_rev.b == 0.5
        assert new_use == use
        with pytest.raises(ConfigError):
            params_from_config({"rev.q": "1"})


class TestDataset(object):

    def test_canonical_panel_counts(self):
        panel = canonical_panel()
        assert len(panel) == 34
        assert panel.weeks() == list(range(1, 18))
        for metric in (UV, PV):
            assert len(complete_weeks(panel, metric).weeks()) == 15
        assert panel.get(9, E).unique_visitors is None
        assert panel.get(1, Y).page_views is None
        assert panel.get(9, Y).unique_visitors is not None

    def test_canonical_panel_averages(self):
        stats = summary_stats(canonical_panel())
        assert stats.listings[E] == pytest.approx(5822, rel=1e-9)
        assert stats.listings[Y] == pytest.approx(3349, rel=1e-9)
        assert stats.unique_visitors[E] == pytest.approx(6250, rel=1e-9)
        assert stats.unique_visitors[Y] == pytest.approx(527, rel=1e-9)
        assert stats.page_views[E] == pytest.approx(763638, rel=1e-9)
        assert stats.page_views[Y] == pytest.approx(1726, rel=1e-9)

        assert stats.uv_per_listing[E] == pytest.approx(1.07, abs=0.02)
        assert stats.uv_per_listing[Y] == pytest.approx(0.16, abs=0.01)
        assert stats.pv_per_listing[E] == pytest.approx(131.2, rel=0.02)
        assert stats.pv_per_listing[Y] == pytest.approx(0.52, abs=0.02)
        assert stats.complete_weeks == {UV: 15, PV: 15}

    def test_canonical_panel_wiggle(self):
        """
        Listings stay within a few percent of the weekly averages
        """
        panel = canonical_panel()
        for obs in panel:
            mean = 5822 if obs.site is E else 3349
            assert abs(obs.listings / mean - 1) < 0.2

    def test_parse_panel(self):
        text = "\n".join([
            "# a comment line",
            "week,site,listings_thousands,unique_visitors_thousands,page_views_thousands",
            "1,E,5800,6200,760000",
            "1,Y,3300,,",
            "2,E,5850,6300,765000",
            "2,Y,3400,530,1730",
        ])
        panel = parse_panel(text)
        assert len(panel) == 4
        assert panel.get(1, Y).unique_visitors is None
        assert panel.get(2, E).page_views == 765000
        assert complete_weeks(panel, UV).weeks() == [2]

    def test_parse_panel_empty(self):
        header = "week,site,listings_thousands,unique_visitors_thousands,page_views_thousands\n"
        panel = parse_panel(header)
        assert len(panel) == 0
        assert complete_weeks(panel, UV).weeks() == []
        assert len(parse_panel("")) == 0

    def test_parse_panel_errors(self):
        header = "week,site,listings_thousands,unique_visitors_thousands,page_views_thousands"
        with pytest.raises(PanelParseError) as excinfo:
            parse_panel(header + "\n1,E,5800,6200,760000\n1,Y,0,500,1700\n")
        assert excinfo.value.line_number == 3
        assert "line 3" in str(excinfo.value)

        with pytest.raises(PanelParseError) as excinfo:
            parse_panel(header + "\n1,E,5800,6200,760000\n1,E,5800,6200,760000\n")
        assert "Duplicate" in str(excinfo.value)

        with pytest.raises(PanelParseError):
            parse_panel(header + "\n1,Q,5800,6200,760000\n")
        with pytest.raises(PanelParseError):
            parse_panel(header + "\nx,E,5800,6200,760000\n")
        with pytest.raises(PanelParseError):
            parse_panel(header + "\n1,E,5800,6200\n")
        with pytest.raises(PanelParseError) as excinfo:
            parse_panel("week,site,listings\n")
        assert excinfo.value.line_number == 1

    def test_serialize_round_trip(self):
        panel = canonical_panel()
        text = serialize_panel(panel)
        reparsed = parse_panel(text)
        assert serialize_panel(reparsed) == text
        assert parse_panel(serialize_panel(reparsed)) == reparsed
        assert text.splitlines()[0] == \
            "week,site,listings_thousands,unique_visitors_thousands,page_views_thousands"

    def test_complete_weeks_idempotent(self):
        panel = canonical_panel()
        once = complete_weeks(panel, UV)
        assert complete_weeks(once, UV) == once
        assert set(once.weeks()) <= set(panel.weeks())

        no_missing = synthesize_panel(usage_params(1.0, 0.0, 0.0),
                                      random_listings(1, 5), 0.0, 0)
        assert complete_weeks(no_missing, UV) == no_missing

        one_site = synthesize_panel(usage_params(1.0, 0.0, 0.0),
                                    random_listings(1, 5), 0.0, 0,
                                    missing=[(w, Y) for w in range(1, 6)])
        assert len(complete_weeks(one_site, UV)) == 0

    def test_summary_stats(self):
        panel = Panel([WeeklyObservation(3, E, 10.0, 20.0, 400.0),
                       WeeklyObservation(3, Y, 5.0, 2.0, None)])
        stats = summary_stats(panel)
        assert stats.listings == {E: 10.0, Y: 5.0}
        assert stats.uv_per_listing == {E: 2.0, Y: 0.4}
        assert stats.page_views[Y] is None
        assert stats.complete_weeks == {UV: 1, PV: 0}

        with pytest.raises(InvalidInputError):
            summary_stats(Panel())

    def test_synthesize_deterministic(self):
        _, use = reference_parameters(UV)
        listings = random_listings(4, 17)
        first = synthesize_panel(use, listings, 0.05, seed=99)
        second = synthesize_panel(use, listings, 0.05, seed=99)
        assert first == second
        assert synthesize_panel(use, listings, 0.05, seed=100) != first

    def test_synthesize_noise_free(self):
        use = usage_params(1.2, -0.3, 2.0, 0.1, -0.1)
        listings = random_listings(5, 6)
        panel = synthesize_panel(use, listings, 0.0, seed=1, metric=PV)
        for obs in panel:
            rival = panel.get(obs.week, obs.site.rival)
            assert obs.unique_visitors is None
            assert obs.page_views == pytest.approx(
                usage_level(use, obs.listings, rival.listings, obs.site),
                rel=1e-12
            )

    def test_summary_stats_noise_limit(self):
        """
        Weekly averages of a synthesized panel approach the model means as
        the noise vanishes
        """
        use = usage_params(1.2, -0.3, 2.0, 0.1, -0.1)
        listings = random_listings(6, 17)
        expected = {site: np.mean([usage_level(use, own, rival, site)
                                   for own, rival in zip(listings[site],
                                                         listings[site.rival])])
                    for site in (E, Y)}
        errors = []
        for noise in (0.0, 1e-2, 1e-4):
            stats = summary_stats(synthesize_panel(use, listings, noise, seed=5))
            errors.append(max(abs(stats.unique_visitors[s] / expected[s] - 1)
                              for s in (E, Y)))
        assert errors[0] < 1e-12
        assert errors[2] < errors[1] < 0.05
        assert errors[2] < 5e-4

    def test_synthesize_invalid(self):
        use = usage_params(1.0, 0.0, 0.0)
        with pytest.raises(InvalidInputError):
            synthesize_panel(use, random_listings(1, 4), -0.1, 0)
        with pytest.raises(InvalidInputError):
            synthesize_panel(use, {E: [1.0, 2.0], Y: [1.0, 0.0]}, 0.0, 0)


class TestEconometrics(object):

    def test_ols_exact(self):
        rng = np.random.default_rng(7)
        design = rng.normal(size=(20, 2))
        response = 1.5 + design @ np.array([2.0, -0.5])
        fit = ols(design, response)
        assert fit.coefficients == pytest.approx([1.5, 2.0, -0.5], rel=1e-12)
        assert float(fit.residuals @ fit.residuals) == pytest.approx(0.0, abs=1e-20)
        assert fit.design_labels == ["const", "x1", "x2"]
        assert fit.r_squared == pytest.approx(1.0)

    def test_ols_normal_equations(self):
        """
        Coefficients match an explicit inversion of X'X, and residuals are
        orthogonal to every regressor
        """
        rng = np.random.default_rng(11)
        design = rng.normal(size=(30, 3))
        response = design @ np.array([0.3, -1.0, 2.0]) + rng.normal(size=30)
        fit = ols(design, response, include_intercept=False)

        inverse = np.linalg.inv(design.T @ design)
        brute = inverse @ design.T @ response
        assert fit.coefficients == pytest.approx(brute, rel=1e-8)

        norm = np.linalg.norm(response)
        for column in design.T:
            assert abs(column @ fit.residuals) < 1e-8 * norm

        sigma2 = float(fit.residuals @ fit.residuals) / (30 - 3)
        assert fit.standard_errors == pytest.approx(np.sqrt(np.diag(sigma2 * inverse)))
        assert fit.r_squared is None

    def test_ols_errors(self):
        with pytest.raises(InsufficientDataError):
            ols([[1.0], [2.0]], [1.0, 2.0])
        x = np.arange(10.0)
        with pytest.raises(SingularDesignError):
            ols(np.column_stack([x, 2 * x]), x)

    def test_singular_design_names_collinear_columns(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=12)
        z = rng.normal(size=12)
        with pytest.raises(SingularDesignError) as excinfo:
            ols(np.column_stack([x, 2 * x, z]), x + z)
        message = str(excinfo.value)
        assert "(x1, x2)" in message
        assert "x3" not in message
        assert "const" not in message

    def test_revenue_elasticity_canonical(self):
        panel = canonical_panel()
        expected = {(0.04, UV): 0.0216, (0.04, PV): 0.0074,
                    (0.033, UV): 0.0178, (0.033, PV): 0.0061,
                    (0.025, UV): 0.0134, (0.025, PV): 0.0046}
        for (alpha_bar, metric), value in expected.items():
            fit = estimate_revenue_elasticity(panel, alpha_bar, metric)
            assert fit.coefficient("b") == pytest.approx(value, rel=0.05)
            assert fit.n_observations == 15
            assert fit.r_squared is None
            assert fit.standard_error("b") > 0

    def test_revenue_elasticity_constant_regressor(self):
        panel = Panel()
        for week in range(1, 6):
            panel.add(WeeklyObservation(week, E, 1000.0, 1070.0, None))
            panel.add(WeeklyObservation(week, Y, 1000.0, 157.0, None))
        fit = estimate_revenue_elasticity(panel, 0.04, UV)
        x = math.log(1.07 / 0.157)
        assert fit.coefficient("b") == pytest.approx(-math.log(0.96) / x, rel=1e-12)
        assert fit.coefficient("b") == pytest.approx(0.0213, abs=1e-4)

    def test_revenue_elasticity_gamma_invariant(self):
        panel = canonical_panel()
        estimates = [estimate_revenue_elasticity(panel, 0.04, UV, gamma=g)
                     .coefficient("b") for g in (0.5, 1.0, 2.0)]
        assert estimates[0] == estimates[1] == estimates[2]

    def test_revenue_elasticity_units_invariant(self):
        panel = canonical_panel()
        scaled = Panel(obs._replace(
            listings=obs.listings * 1000,
            unique_visitors=obs.unique_visitors and obs.unique_visitors * 1000,
            page_views=obs.page_views and obs.page_views * 1000
        ) for obs in panel)
        assert estimate_revenue_elasticity(scaled, 0.04, UV).coefficient("b") == \
            pytest.approx(estimate_revenue_elasticity(panel, 0.04, UV)
                          .coefficient("b"), rel=1e-10)

    def test_revenue_elasticity_errors(self):
        panel = canonical_panel()
        with pytest.raises(InvalidInputError):
            estimate_revenue_elasticity(panel, 1.0, UV)
        short = Panel(obs for obs in panel if obs.week <= 2)
        with pytest.raises(InsufficientDataError):
            estimate_revenue_elasticity(short, 0.04, UV)

    def test_usage_equation_noise_free(self):
        use = usage_params(1.989, -1.876, 6.564)
        panel = synthesize_panel(use, random_listings(3, 15), 0.0, seed=0)
        fit = estimate_usage_equation(panel, UV)
        assert fit.design_labels == ["c", "beta1", "beta2"]
        assert fit.coefficients == pytest.approx([6.564, 1.989, -1.876], rel=1e-10)
        assert fit.n_observations == 30

    def test_usage_equation_canonical(self):
        panel = canonical_panel()
        references = {UV: (1.989, -1.876), PV: (4.743, -4.718)}
        for metric, (beta1, beta2) in references.items():
            fit = estimate_usage_equation(panel, metric)
            assert fit.coefficient("beta1") > 0
            assert fit.coefficient("beta2") < 0
            assert fit.coefficient("beta1") == pytest.approx(beta1, rel=0.15)
            assert fit.coefficient("beta2") == pytest.approx(beta2, rel=0.15)
            assert fit.r_squared >= 0.9

    def test_usage_equation_units(self):
        """
        Rescaling listings and usage by k moves only the constant, by
        (1 - beta1 - beta2) ln k
        """
        use = usage_params(1.4, -0.6, 3.0)
        panel = synthesize_panel(use, random_listings(8, 12), 0.0, seed=0)
        k = 1000.0
        scaled = Panel(obs._replace(listings=obs.listings * k,
                                    unique_visitors=obs.unique_visitors * k)
                       for obs in panel)
        base = estimate_usage_equation(panel, UV)
        moved = estimate_usage_equation(scaled, UV)
        assert moved.coefficient("beta1") == pytest.approx(1.4, rel=1e-8)
        assert moved.coefficient("beta2") == pytest.approx(-0.6, rel=1e-8)
        assert moved.coefficient("c") - base.coefficient("c") == \
            pytest.approx((1 - 1.4 + 0.6) * math.log(k), rel=1e-6)

    def test_usage_equation_collinear(self):
        panel = Panel()
        for week, listings in enumerate([10.0, 12.0, 15.0, 11.0], start=1):
            for site in (E, Y):
                panel.add(WeeklyObservation(week, site, listings, 20.0 + week,
                                            None))
        with pytest.raises(SingularDesignError) as excinfo:
            estimate_usage_equation(panel, UV)
        assert "collinear" in str(excinfo.value)
        assert "(beta1, beta2)" in str(excinfo.value)

    def test_usage_residual_site_means(self):
        """
        The common intercept leaves the site effects in the residuals, with
        per-site means of opposite sign
        """
        use = usage_params(1.989, -1.876, 6.564, 0.43, -0.43)
        listings = random_listings(12, 17, scale=(100.0, 100.0))
        fit = estimate_usage_equation(synthesize_panel(use, listings, 0.02,
                                                       seed=8), UV)
        mean_e = float(np.mean(fit.residuals[0::2]))
        mean_y = float(np.mean(fit.residuals[1::2]))
        assert mean_e == pytest.approx(-mean_y, abs=1e-10)
        assert mean_e > 0.2

    def test_usage_equation_insufficient(self):
        panel = Panel([WeeklyObservation(1, E, 10.0, 5.0, None),
                       WeeklyObservation(1, Y, 8.0, 4.0, None)])
        with pytest.raises(InsufficientDataError):
            estimate_usage_equation(panel, UV)

    def test_monte_carlo_coverage(self):
        use = usage_params(1.989, -1.876, 6.564)
        report = monte_carlo_coverage(use, random_listings(21, 15), 0.05,
                                      replications=200, seed=2024)
        assert report.replications == 200
        for term in ("c", "beta1", "beta2"):
            assert report.coverage[term] >= 0.99
        assert report.mean_estimates["beta1"] == pytest.approx(1.989, abs=0.05)

    def test_standard_errors_shrink(self):
        """
        Quadrupling the sample with the same listing design halves the
        standard errors: slope of ln SE against ln n is about -0.5
        """
        use = usage_params(1.2, -0.8, 3.0)
        small = random_listings(31, 20)
        large = {site: np.tile(path, 4) for site, path in small.items()}

        def mean_se(listings, seed):
            children = np.random.SeedSequence(seed).spawn(100)
            errors = [estimate_usage_equation(
                synthesize_panel(use, listings, 0.05, child), UV
            ).standard_error("beta1") for child in children]
            return np.mean(errors)

        slope = (math.log(mean_se(large, 2)) - math.log(mean_se(small, 1))) / \
            math.log(4)
        assert slope == pytest.approx(-0.5, abs=0.05)

    def test_monte_carlo_needs_equal_preferences(self):
        use = usage_params(1.0, 0.0, 0.0, 0.1, -0.1)
        with pytest.raises(InvalidInputError):
            monte_carlo_coverage(use, random_listings(1, 10), 0.05, 5, 0)


class TestEquilibrium(object):

    def test_symmetric_fixed_total(self):
        problem = symmetric_problem()
        solution = solve_fixed_total(problem)
        assert len(solution.roots) == 1
        assert listing_share(solution.state) == pytest.approx(0.5, abs=1e-6)
        assert solution.closure == FIXED_TOTAL

    def test_fixed_total_contract(self):
        """
        Every root conserves total listings exactly and re-verifies through
        the indifference residual
        """
        problem = symmetric_problem(alpha_e=0.05, alpha_y=0.02)
        solution = solve_fixed_total(problem, tolerance=1e-10)
        for root in solution.roots:
            assert root.listings[E] + root.listings[Y] == 200.0
            assert abs(indifference_residual(root, problem.rev, problem.use,
                                             problem.fees)) < 1e-10
        assert abs(solution.residual) < 1e-10

    def test_fixed_total_fee_comparative_static(self):
        """
        When reallocation lowers a site's relative revenue, raising its fee
        lowers its share
        """
        base = solve_fixed_total(symmetric_problem())
        higher = solve_fixed_total(symmetric_problem(alpha_e=0.04))
        assert base.stability.reallocation_exponent < 0
        assert base.stability.classification == "stable"
        assert base.stability.share_slope < 0
        assert listing_share(higher.state) < listing_share(base.state)

    def test_fixed_total_tipping_point(self):
        """
        With the calibrated estimates reallocation raises relative revenue,
        so the interior root is a tipping point and a higher eBay fee moves
        it towards eBay
        """
        problem = calibrated_problem(UV, FIXED_TOTAL)
        base = solve_fixed_total(problem)
        raised = dict(problem.fees)
        raised[E] = raised[E]._replace(alpha=raised[E].alpha + 0.01)
        moved = solve_fixed_total(problem._replace(fees=raised))
        assert base.stability.reallocation_exponent > 0
        assert listing_share(moved.state) > listing_share(base.state)

    def test_fixed_total_tipping_point_classification(self):
        problem = calibrated_problem(UV, FIXED_TOTAL)
        solution = solve_fixed_total(problem)
        share = listing_share(solution.state)
        report = solution.stability
        assert report.classification == "unstable (tipping point)"
        assert report.label == "positive feedback, unstable (tipping point)"
        assert share_residual(problem, share - 0.01) < 0
        assert share_residual(problem, share + 0.01) > 0
        secant = (share_residual(problem, share + 1e-6) -
                  share_residual(problem, share - 1e-6)) / 2e-6
        assert report.share_slope == pytest.approx(secant, rel=1e-4)

    def test_calibrated_fixed_total(self):
        for metric in (UV, PV):
            problem = calibrated_problem(metric, FIXED_TOTAL)
            observed = observed_state_2001(metric)
            assert abs(indifference_residual(observed, problem.rev, problem.use,
                                             problem.fees)) < 1e-10

            solution = solve_fixed_total(problem)
            assert listing_share(solution.state) == \
                pytest.approx(5822 / 9171, abs=1e-6)
            for site in (E, Y):
                assert solution.state.listings[site] == \
                    pytest.approx(observed.listings[site], rel=1e-6)
                assert solution.state.usage[site] == \
                    pytest.approx(observed.usage[site], rel=1e-5)

    def test_no_interior_equilibrium(self):
        problem = symmetric_problem(alpha_e=0.03, alpha_y=0.5)
        with pytest.raises(NoInteriorEquilibriumError) as excinfo:
            solve_fixed_total(problem)
        assert "corner solution" in str(excinfo.value)
        assert excinfo.value.residual_low > 0
        assert excinfo.value.residual_high > 0

    def test_grid_points_minimum(self):
        with pytest.raises(InvalidInputError):
            solve_fixed_total(symmetric_problem(), grid_points=8)

    def test_problem_validation(self):
        rev = revenue_params(1.0, 0.1)
        use = usage_params(1.0, 0.0, 0.0)
        bad_fees = {E: PlatformFees(1.0, 0.0), Y: PlatformFees(0.0, 0.0)}
        with pytest.raises(InvalidInputError):
            EquilibriumProblem(rev, use, bad_fees, FixedTotal(10.0), UV)
        ok_fees = {E: PlatformFees(0.0, 0.0), Y: PlatformFees(0.0, 0.0)}
        with pytest.raises(InvalidInputError):
            EquilibriumProblem(rev, use, ok_fees, FixedTotal(0.0), UV)
        state = induced_state(use, 1.0, 1.0)
        with pytest.raises(InvalidInputError):
            EquilibriumProblem(rev, use, ok_fees, ElasticEntry(0.0, state), UV)

    def test_elastic_entry_immediate_convergence(self):
        rev = revenue_params(a=20.0, b=0.1)
        use = usage_params(1.5, -0.5, 0.0)
        reference = induced_state(use, 50.0, 50.0)
        problem_fees = {E: PlatformFees(0.05, 0.2), Y: PlatformFees(0.05, 0.2)}
        net = site_net_revenues(reference, rev, problem_fees)[E]
        problem = EquilibriumProblem(rev, use, problem_fees,
                                     ElasticEntry(net, reference), UV)
        trajectory = iterate_dynamics(problem, reference)
        assert trajectory.converged
        assert trajectory.periods == 0
        assert len(trajectory.states) == 1

        solution = solve_elastic_entry(problem)
        assert solution.periods == 0
        assert solution.closure == ELASTIC_ENTRY

    def test_calibrated_elastic_entry(self):
        problem = calibrated_problem(UV, ELASTIC_ENTRY)
        observed = observed_state_2001(UV)
        for factor in (0.95, 1.05):
            initial = market_state(observed.listings[E] * factor,
                                   observed.listings[Y] / factor, 1.0, 1.0)
            solution = solve_elastic_entry(problem, initial=initial)
            assert solution.periods > 0
            assert max(abs(g) for g in solution.residual.values()) < 1e-10
            for site in (E, Y):
                assert solution.state.listings[site] == \
                    pytest.approx(observed.listings[site], rel=1e-8)

    def test_solver_cross_check(self):
        fixed = solve_fixed_total(calibrated_problem(UV, FIXED_TOTAL))
        elastic = solve_elastic_entry(calibrated_problem(UV, ELASTIC_ENTRY))
        for site in (E, Y):
            assert math.log(elastic.state.listings[site]) == \
                pytest.approx(math.log(fixed.state.listings[site]), rel=1e-6)

    def test_calibrated_stability(self):
        problem = calibrated_problem(UV, ELASTIC_ENTRY)
        report = stability_at(problem, problem.closure.reference, damping=0.2)
        assert report.own_exponent == pytest.approx(0.0214, abs=1e-4)
        assert report.feedback_sign == "positive"
        assert report.classification == "stable"
        assert report.label == "positive feedback, stable"
        assert report.map_spectral_radius < 1
        assert report.damped_spectral_radius == pytest.approx(0.8125, abs=1e-3)

    def test_geometric_decay(self):
        """
        Log distance to the equilibrium decays monotonically at about the
        damped spectral radius
        """
        problem = calibrated_problem(UV, ELASTIC_ENTRY)
        reference = problem.closure.reference
        initial = market_state(reference.listings[E] * 1.05,
                               reference.listings[Y] * 0.95, 1.0, 1.0)
        trajectory = iterate_dynamics(problem, initial, damping=0.2)
        assert trajectory.converged
        distances = log_distances(trajectory, reference)
        assert all(a > b for a, b in zip(distances[:60], distances[1:61]))
        rate = (distances[40] / distances[10]) ** (1 / 30)
        report = stability_at(problem, reference, damping=0.2)
        assert rate == pytest.approx(report.damped_spectral_radius, abs=0.02)

    def test_stability_trivial_cases(self):
        use = usage_params(1.3, -0.4, 0.0)
        state = induced_state(use, 10.0, 10.0)
        zero_fees = {E: PlatformFees(0.0, 0.0), Y: PlatformFees(0.0, 0.0)}

        flat = EquilibriumProblem(revenue_params(1.0, 0.0), use, zero_fees,
                                  FixedTotal(20.0), UV)
        report = stability_at(flat, state)
        assert report.classification == "neutral"
        assert report.map_spectral_radius == 0
        assert not report.map_matrix.any()

        unit_use = usage_params(1.0, 0.0, 0.0)
        unit = EquilibriumProblem(revenue_params(1.0, 0.3), unit_use,
                                  zero_fees, FixedTotal(20.0), UV)
        report = stability_at(unit, induced_state(unit_use, 10.0, 10.0))
        assert report.map_spectral_radius == 0

    def super_unit_problem(self):
        rev = revenue_params(a=1.0, b=1.0)
        use = usage_params(2.5, 0.0, 0.0)
        reference = induced_state(use, 10.0, 10.0)
        zero_fees = {E: PlatformFees(0.0, 0.0), Y: PlatformFees(0.0, 0.0)}
        net = site_net_revenues(reference, rev, zero_fees)[E]
        return EquilibriumProblem(rev, use, zero_fees,
                                  ElasticEntry(net, reference), UV)

    def test_divergence(self):
        problem = self.super_unit_problem()
        reference = problem.closure.reference
        initial = market_state(10.5, 10.0, 1.0, 1.0)

        report = stability_at(problem, reference)
        assert report.classification == "unstable"
        assert report.map_spectral_radius == pytest.approx(1.5)

        trajectory = iterate_dynamics(problem, initial, damping=0.2,
                                      max_periods=10000)
        assert trajectory.diverged
        assert not trajectory.converged
        distances = log_distances(trajectory, reference)
        assert all(a < b for a, b in zip(distances[5:], distances[6:]))

        with pytest.raises(InstabilityError) as excinfo:
            solve_elastic_entry(problem, initial=initial)
        assert excinfo.value.trajectory.diverged
        assert len(excinfo.value.trajectory.states) > 1

    def test_randomised_stability_agreement(self):
        """
        Stable classifications converge and radii above 1.05 diverge, over
        20 random parameter draws
        """
        rng = np.random.default_rng(12345)
        zero_fees = {E: PlatformFees(0.05, 0.0), Y: PlatformFees(0.05, 0.0)}
        checked = 0
        for _ in range(20):
            rev = revenue_params(a=10.0, b=rng.uniform(0.05, 1.0))
            use = usage_params(rng.uniform(0.0, 3.0), rng.uniform(-2.0, 1.0),
                               0.0)
            reference = induced_state(use, 100.0, 100.0)
            net = site_net_revenues(reference, rev, zero_fees)[E]
            problem = EquilibriumProblem(rev, use, zero_fees,
                                         ElasticEntry(net, reference), UV)
            report = stability_at(problem, reference, damping=1.0)
            if 0.95 <= report.map_spectral_radius <= 1.05:
                continue
            trajectory = iterate_dynamics(problem,
                                          market_state(105.0, 97.0, 1.0, 1.0),
                                          damping=1.0, max_periods=2000)
            if report.classification == "stable":
                assert trajectory.converged
            else:
                assert trajectory.diverged
            checked += 1
        assert checked > 10

    def test_insertion_fee_comparative_static(self):
        """
        Under elastic entry a higher own insertion fee lowers own listings
        """
        problem = calibrated_problem(UV, ELASTIC_ENTRY)
        previous = None
        for fee in (0.35, 0.55, 0.75, 0.95):
            adjusted = dict(problem.fees)
            adjusted[E] = adjusted[E]._replace(insertion=fee)
            listings = solve_elastic_entry(
                problem._replace(fees=adjusted)).state.listings[E]
            if previous is not None:
                assert listings < previous
            previous = listings

    def test_no_equilibrium(self):
        problem = calibrated_problem(UV, ELASTIC_ENTRY)
        expensive = dict(problem.fees)
        expensive[Y] = PlatformFees(0.0, 1000.0)
        with pytest.raises(NoEquilibriumError):
            solve_elastic_entry(problem._replace(fees=expensive))

    def test_counterfactual_direction(self):
        """
        Moving Yahoo!Auctions from free listing to the 2001 schedule moves
        listings away from Yahoo and weakly towards eBay
        """
        problem = calibrated_problem(UV, ELASTIC_ENTRY)
        base = problem._replace(fees=fall_2000_fees())
        result = counterfactual_compare(base, problem.fees)
        assert result.listing_deltas[Y] < 0
        assert result.listing_deltas[E] >= 0
        assert result.share_delta > 0
        assert result.closure == ELASTIC_ENTRY
        for site in (E, Y):
            assert result.after.state.listings[site] == \
                pytest.approx(observed_state_2001(UV).listings[site], rel=1e-8)

    def test_counterfactual_no_change(self):
        problem = calibrated_problem(UV, FIXED_TOTAL)
        result = counterfactual_compare(problem, problem.fees)
        for site in (E, Y):
            assert result.listing_deltas[site] == pytest.approx(0.0, abs=1e-9)
            assert result.usage_deltas[site] == pytest.approx(0.0, abs=1e-9)
        assert result.share_delta == pytest.approx(0.0, abs=1e-12)

    def test_counterfactual_scenario_label(self):
        problem = calibrated_problem(UV, ELASTIC_ENTRY)
        expensive = dict(problem.fees)
        expensive[E] = PlatformFees(0.0, 1000.0)
        with pytest.raises(ScenarioError) as excinfo:
            counterfactual_compare(problem, expensive)
        assert excinfo.value.label == "after"
        assert str(excinfo.value).startswith("after scenario")


class TestConfig(object):

    def test_parse_config(self):
        text = "\n".join([
            "# solver settings",
            "",
            "solver.damping = 0.5",
            "solver.damping=0.3",
            "rev.b = 0.02",
        ])
        assert parse_config(text) == {"solver.damping": "0.3", "rev.b": "0.02"}

    def test_parse_config_errors(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_config("solver.damping = 0.5\nnot.a.key = 1")
        assert "line 2" in str(excinfo.value)
        with pytest.raises(ConfigError):
            parse_config("no equals sign")
        with pytest.raises(ConfigError):
            parse_config(" = 3")

    def test_resolve_precedence(self):
        config = resolve_config("solver.damping = 0.5\nsolver.tolerance = 1e-8",
                                ["solver.damping=0.4", "rev.b=0.03"],
                                {"solver.damping": 0.3,
                                 "solver.grid_points": None})
        assert config.get_float("solver.damping") == 0.3
        assert config.get_float("solver.tolerance") == 1e-8
        assert config.get_int("solver.grid_points") == 512
        assert config.parameter_entries() == {"rev.b": "0.03"}
        keys = [k for k, _ in config.items()]
        assert keys == sorted(keys)

    def test_resolve_unknown_override(self):
        with pytest.raises(ConfigError):
            resolve_config(overrides=["solver.speed=3"])


class TestReporting(object):

    def test_empty_csv(self):
        table = Table(title="Empty", columns=["term", "estimate", "std_error"],
                      rows=[])
        assert ReportBuilder().render_report([table], "csv") == \
            "term,estimate,std_error\n"

    def test_markdown_fit_table(self):
        fit = estimate_usage_equation(canonical_panel(), UV)
        text = ReportBuilder().render_report([fit_table("Usage", fit)],
                                             "markdown")
        assert "| term | estimate | std_error |" in text
        assert "| beta1 |" in text
        assert "### Usage" in text

    def test_text_report(self):
        table = Table(title="Fees", columns=["platform", "total"],
                      rows=[["E", Decimal("2.425")], ["Y", Decimal("0.35")]],
                      notes=("median case",))
        text = ReportBuilder().render_report([table], "text",
                                             [("solver.damping", "0.2")])
        lines = text.splitlines()
        assert lines[0] == "# solver.damping = 0.2"
        assert "E         2.425" in text
        assert "median case" in text


class TestScript(object):

    def test_fees_quote(self, capsys):
        status = run(["fees", "quote", "--platform", "E", "--opening", "15.00",
                      "--closing", "50.00"])
        out, err = capsys.readouterr()
        assert status == 0
        assert "2.425" in out
        assert err == ""

    def test_fees_quote_minimum(self, capsys):
        status = run(["fees", "quote", "--opening", "0.00", "--closing",
                      "50.00"])
        _, err = capsys.readouterr()
        assert status == 1
        assert err.startswith("ERROR:")
        assert "$0.01" in err

    def test_fees_alpha_and_invert(self, capsys):
        assert run(["--format", "csv", "fees", "alpha", "--opening", "15.00",
                    "--closing", "50.00"]) == 0
        out, _ = capsys.readouterr()
        assert "15.00,50.00,2.425,0.35,2.075,0.0415" in out

        assert run(["--format", "csv", "fees", "invert", "--alpha", "0.03325",
                    "--opening", "15.00"]) == 0
        out, _ = capsys.readouterr()
        assert ",15.00,100.00," in out

        assert run(["fees", "invert", "--alpha", "0.000001", "--opening",
                    "15.00"]) == 2

    def test_bad_arguments(self, capsys):
        assert run(["fees", "quote", "--opening", "abc", "--closing",
                    "1.00"]) == 1
        assert run(["--set", "solver.speed=1", "fees", "alpha", "--opening",
                    "1.00", "--closing", "2.00"]) == 1
        assert run(["estimate", "usage", "--panel", "/does/not/exist.csv"]) == 3

    def test_estimate_revenue(self, tmpdir, capsys):
        path = str(tmpdir.join("canonical.csv"))
        assert run(["data", "synth", "--canonical", "--output", path]) == 0
        assert run(["--format", "csv", "estimate", "revenue", "--panel", path,
                    "--alpha", "0.04", "--metric", "uv"]) == 0
        out, _ = capsys.readouterr()
        rows = [line.split(",") for line in out.splitlines()
                if line.startswith("b,")]
        assert len(rows) == 1
        assert float(rows[0][1]) == pytest.approx(0.0216, rel=0.05)
        assert float(rows[0][2]) > 0
        assert "# solver.damping = 0.2" in out

    def test_data_commands(self, tmpdir, capsys):
        path = str(tmpdir.join("synthetic.csv"))
        assert run(["--seed", "3", "data", "synth", "--output", path]) == 0
        assert run(["--format", "csv", "data", "parse", "--panel", path]) == 0
        out, _ = capsys.readouterr()
        assert "observations,34" in out
        assert "complete_weeks_uv,15" in out
        assert "complete_weeks_pv,0" in out

        assert run(["data", "stats", "--panel", path]) == 0

    def test_utf8_panel(self, tmpdir, capsys):
        path = tmpdir.join("panel.csv")
        path.write_text(
            "# Yahoo!オークション, données de la semaine\n"
            "week,site,listings_thousands,unique_visitors_thousands,"
            "page_views_thousands\n"
            "1,E,5822,5329,\n"
            "1,Y,3349,1030,\n",
            encoding="utf-8"
        )
        assert run(["--format", "csv", "data", "parse", "--panel",
                    str(path)]) == 0
        out, _ = capsys.readouterr()
        assert "observations,2" in out

    def test_equilibrium_solve(self, capsys):
        assert run(["--format", "csv", "equilibrium", "solve"]) == 0
        out, _ = capsys.readouterr()
        assert "0.634827" in out
        assert "positive feedback, unstable (tipping point)" in out

    def test_equilibrium_counterfactual(self, capsys):
        assert run(["equilibrium", "counterfactual"]) == 0
        out, _ = capsys.readouterr()
        for block in ("Counterfactual before", "Counterfactual after",
                      "Counterfactual delta"):
            assert block in out
        assert "Observed listings, fall 2000 to 2001" in out

    def test_fixed_total_counterfactual_flags_tipping_point(self, capsys):
        assert run(["equilibrium", "counterfactual", "--closure",
                    "fixed-total"]) == 0
        out, _ = capsys.readouterr()
        assert "before root: positive feedback, unstable (tipping point)" \
            in out
        assert "comparative statics are reversed" in out

        assert run(["equilibrium", "counterfactual"]) == 0
        out, _ = capsys.readouterr()
        assert "before root: positive feedback, stable" in out
        assert "comparative statics are reversed" not in out

    def test_equilibrium_dynamics(self, capsys):
        assert run(["--format", "csv", "equilibrium", "dynamics",
                    "--damping", "0.5"]) == 0
        out, _ = capsys.readouterr()
        assert "# solver.damping = 0.5" in out
        assert "period,listings_E,listings_Y,usage_E,usage_Y,log_distance" in out

    def test_replicate_deterministic(self, capsys):
        argv = ["--format", "csv", "--seed", "5", "replicate",
                "--replications", "20"]
        assert run(argv) == 0
        first, _ = capsys.readouterr()
        assert run(argv) == 0
        second, _ = capsys.readouterr()
        assert first == second
        assert "Monte Carlo coverage" in first
