"""
Fee quotes, panel handling, estimation and equilibrium analysis of the
two-platform auction listing market.

Reports go to standard output; log messages and errors go to standard error.
"""
import sys
import logging
import argparse

from listing_market import fees as fee_engine
from listing_market.config import resolve_config
from listing_market.dataset import (canonical_panel, complete_weeks,
                                    parse_panel, serialize_panel, summary_stats,
                                    synthesize_panel, CANONICAL_MISSING,
                                    LISTINGS_2001, LISTINGS_FALL_2000)
from listing_market.econometrics import (estimate_revenue_elasticity,
                                         estimate_usage_equation,
                                         monte_carlo_coverage)
from listing_market.equilibrium import (FIXED_TOTAL, ELASTIC_ENTRY,
                                        SolverSettings, calibrated_problem,
                                        counterfactual_compare, fall_2000_fees,
                                        iterate_dynamics, listing_share,
                                        log_distances, root_residuals, solve,
                                        stability_at)
from listing_market.exceptions import (InvalidInputError, NoSolutionError,
                                       EstimationError, EquilibriumError)
from listing_market.model import (Platform, PLATFORMS, UsageMetric,
                                  REVENUE_ELASTICITY_ESTIMATES, USAGE_ESTIMATES,
                                  market_state, params_from_config,
                                  reference_parameters)
from listing_market.reporting import (FORMATS, ReportBuilder, Table,
                                      coverage_table, counterfactual_tables,
                                      fee_quote_table, fit_table, schedule_table,
                                      solution_tables, stability_table,
                                      summary_table, trajectory_table)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_SOLVER = 2
EXIT_IO = 3

METRICS = {m.value: m for m in UsageMetric}
ALPHA_BARS = (0.04, 0.033, 0.025)


class ArgumentParser(argparse.ArgumentParser):
    """
    Argument parser that reports usage errors as InvalidInputError so they
    share the validation exit status
    """
    def error(self, message):
        raise InvalidInputError("{}: {}".format(self.prog, message))


def money(string):
    try:
        return fee_engine.parse_money(string)
    except InvalidInputError as ex:
        raise argparse.ArgumentTypeError(str(ex))


def metric(string):
    try:
        return METRICS[string]
    except KeyError:
        raise argparse.ArgumentTypeError("metric must be one of: {}"
                                         .format(", ".join(sorted(METRICS))))


def read_text(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as f:
        return f.read()


class Run(object):
    """
    State shared by the subcommand handlers of one invocation
    """

    def __init__(self, args, config):
        self.args = args
        self.config = config

        self.schedules = dict(fee_engine.SCHEDULES_2001)
        self.schedules.update(
            fee_engine.schedules_from_entries(config.schedule_entries())
        )
        if args.schedules:
            self.schedules.update(
                fee_engine.load_schedules(read_text(args.schedules))
            )

    @property
    def settings(self):
        return SolverSettings(
            tolerance=self.config.get_float("solver.tolerance"),
            damping=self.config.get_float("solver.damping"),
            grid_points=self.config.get_int("solver.grid_points"),
            max_periods=self.config.get_int("solver.max_periods")
        )

    @property
    def scenario(self):
        return (fee_engine.parse_money(self.config["scenario.opening"]),
                fee_engine.parse_money(self.config["scenario.closing"]))

    def problem(self, metric, closure):
        opening, closing = self.scenario
        problem = calibrated_problem(
            metric, closure,
            elasticity=self.config.get_float("solver.elasticity"),
            opening=opening, closing=closing, schedules=self.schedules
        )
        overrides = self.config.parameter_entries()
        if overrides:
            rev, use = params_from_config(overrides, problem.rev, problem.use)
            problem = problem._replace(rev=rev, use=use)
        return problem

    def panel(self):
        return parse_panel(read_text(self.args.panel))

    # fees

    def fees_quote(self):
        args = self.args
        schedule = self.schedules[args.platform]
        return [fee_quote_table(
            schedule, args.opening, args.closing,
            fee_engine.insertion_fee(schedule, args.opening),
            fee_engine.final_value_fee_exact(schedule, args.closing),
            fee_engine.final_value_fee(schedule, args.closing),
            fee_engine.total_fee(schedule, args.opening, args.closing)
        )]

    def fees_alpha(self):
        comparison = fee_engine.compare_fees(
            self.args.opening, self.args.closing,
            self.schedules[Platform.E], self.schedules[Platform.Y]
        )
        return [comparison_table([comparison])]

    def fees_invert(self):
        args = self.args
        closing = fee_engine.implied_closing_value(
            args.alpha, args.opening, self.schedules[Platform.E],
            self.schedules[Platform.Y]
        )
        alpha_bar = fee_engine.effective_alpha_bar(
            args.opening, closing, self.schedules[Platform.E],
            self.schedules[Platform.Y]
        )
        return [Table(title="Implied closing value",
                      columns=["alpha_target", "opening", "closing",
                               "alpha_bar_at_closing"],
                      rows=[[args.alpha, args.opening, closing, alpha_bar]])]

    # data

    def data_parse(self):
        panel = self.panel()
        rows = [["observations", len(panel)], ["weeks", len(panel.weeks())]]
        for m in UsageMetric:
            rows.append(["complete_weeks_{}".format(m.value),
                         len(complete_weeks(panel, m).weeks())])
        return [Table(title="Panel", columns=["quantity", "value"], rows=rows)]

    def data_stats(self):
        return [summary_table(summary_stats(self.panel()))]

    def data_synth(self):
        args = self.args
        if args.canonical:
            panel = canonical_panel()
        else:
            _, use = reference_parameters(args.metric)
            panel = synthesize_panel(use, canonical_listings(), args.noise_sd,
                                     args.seed, CANONICAL_MISSING, args.metric)
        return serialize_panel(panel)

    # estimate

    def estimate_revenue(self):
        args = self.args
        fit = estimate_revenue_elasticity(self.panel(), args.alpha, args.metric,
                                          gamma=args.gamma)
        return [fit_table("Revenue elasticity ({}, alpha bar {})"
                          .format(args.metric.value, args.alpha), fit)]

    def estimate_usage(self):
        fit = estimate_usage_equation(self.panel(), self.args.metric)
        return [fit_table("Usage equation ({})".format(self.args.metric.value),
                          fit)]

    # equilibrium

    def equilibrium_solve(self):
        problem = self.problem(self.args.metric, self.args.closure)
        solution = solve(problem, self.settings)
        return solution_tables("Equilibrium", solution,
                               *root_residuals(problem, solution))

    def equilibrium_dynamics(self):
        args = self.args
        problem = self.problem(args.metric, ELASTIC_ENTRY)
        reference = problem.closure.reference
        initial = market_state(
            reference.listings[Platform.E] * (1 + args.perturb_e),
            reference.listings[Platform.Y] * (1 + args.perturb_y),
            reference.usage[Platform.E], reference.usage[Platform.Y]
        )
        settings = self.settings
        trajectory = iterate_dynamics(problem, initial, settings.damping,
                                      settings.max_periods, settings.tolerance)
        return [trajectory_table(trajectory,
                                 log_distances(trajectory, reference)),
                stability_table_at(problem, reference, settings.damping)]

    def equilibrium_counterfactual(self):
        blocks = counterfactual_blocks(self.problem(self.args.metric,
                                                    self.args.closure),
                                       self.scenario, self.settings)
        return blocks + [observed_change_table()]

    # replicate

    def replicate(self):
        args = self.args
        opening, closing = self.scenario
        tables = [schedule_table(self.schedules[s]) for s in PLATFORMS]
        footnotes = [
            fee_engine.compare_fees(fee_engine.Money(1500), fee_engine.Money(c),
                                    self.schedules[Platform.E],
                                    self.schedules[Platform.Y])
            for c in (5000, 10000)
        ]
        tables.append(comparison_table(footnotes))

        panel = canonical_panel()
        tables.append(summary_table(summary_stats(panel)))

        rows = []
        for alpha_bar in ALPHA_BARS:
            for m in UsageMetric:
                fit = estimate_revenue_elasticity(panel, alpha_bar, m)
                rows.append([alpha_bar, m.value, fit.coefficient("b"),
                             fit.standard_error("b"),
                             REVENUE_ELASTICITY_ESTIMATES[(alpha_bar, m)]])
        tables.append(Table(
            title="Revenue elasticity",
            columns=["alpha_bar", "metric", "estimate", "std_error",
                     "reference"],
            rows=rows
        ))
        for m in UsageMetric:
            est = USAGE_ESTIMATES[m]
            tables.append(fit_table(
                "Usage equation ({})".format(m.value),
                estimate_usage_equation(panel, m),
                notes=("reference c = {}, beta1 = {}, beta2 = {}, R^2 = {}"
                       .format(est["c"], est["beta1"], est["beta2"],
                               est["r_squared"]),)
            ))

        settings = self.settings
        for closure in (FIXED_TOTAL, ELASTIC_ENTRY):
            problem = self.problem(UsageMetric.UNIQUE_VISITORS, closure)
            solution = solve(problem, settings)
            tables.extend(solution_tables("Calibrated 2001 equilibrium",
                                          solution,
                                          *root_residuals(problem, solution)))
        for closure in (ELASTIC_ENTRY, FIXED_TOTAL):
            tables.extend(counterfactual_blocks(
                self.problem(UsageMetric.UNIQUE_VISITORS, closure),
                (opening, closing), settings
            ))
        tables.append(observed_change_table())

        _, use = reference_parameters(UsageMetric.UNIQUE_VISITORS)
        report = monte_carlo_coverage(use, canonical_listings(), args.noise_sd,
                                      args.replications, args.seed,
                                      progress=args.verbose)
        tables.append(coverage_table(report))
        return tables


def canonical_listings():
    """
    Weekly listings of the canonical panel, per site
    """
    panel = canonical_panel()
    return {site: [obs.listings for obs in panel if obs.site is site]
            for site in PLATFORMS}


def comparison_table(comparisons):
    return Table(
        title="Fee differential",
        columns=["opening", "closing", "total_E", "total_Y", "difference",
                 "alpha_bar"],
        rows=[[c.opening, c.closing, c.total_high, c.total_low, c.difference,
               c.alpha_bar] for c in comparisons]
    )


def observed_change_table():
    rows = [[s.value, LISTINGS_FALL_2000[s], LISTINGS_2001[s],
             LISTINGS_2001[s] - LISTINGS_FALL_2000[s]] for s in PLATFORMS]
    return Table(title="Observed listings, fall 2000 to 2001 (thousands)",
                 columns=["site", "fall_2000", "2001", "change"], rows=rows)


def stability_table_at(problem, state, damping):
    return stability_table(stability_at(problem, state, damping))


def counterfactual_blocks(problem, scenario, settings):
    """
    Solve the fall 2000 fees (Yahoo!Auctions free) as the before scenario and
    the problem's own fees as the after scenario
    """
    base = problem._replace(fees=fall_2000_fees(*scenario))
    result = counterfactual_compare(base, problem.fees, settings)
    return counterfactual_tables(result, listing_share(result.before.state),
                                 listing_share(result.after.state))


def get_parser():
    parser = ArgumentParser(
        prog="listing-market",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument(
        "--config",
        help="File of '<key> = <value>' lines applied on top of the built-in "
             "defaults"
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        default=[],
        action="append",
        metavar="KEY=VALUE",
        help="Configuration entry of the form '<key>=<value>'. Overrides "
             "--config. Can be given multiple times"
    )
    parser.add_argument(
        "--schedules",
        help="File of fee schedule tiers ('insertion.<E|Y>.<k> = "
             "lower,upper,fee' and 'finalvalue.<E|Y>.<k> = lower,upper,rate') "
             "replacing the 2001 schedules of the platforms it names"
    )
    parser.add_argument(
        "--format",
        choices=FORMATS,
        default="text",
        help="Output format [default: %(default)s]"
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Seed of the pseudo-random streams [default: %(default)s]"
    )
    parser.add_argument(
        "-v", "--verbose",
        action="store_true",
        default=False,
        help="Log solver progress to standard error [default: %(default)s]"
    )

    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    # fees
    fees_parser = commands.add_parser("fees", help="Listing fee calculations")
    fees_actions = fees_parser.add_subparsers(dest="action", metavar="ACTION")
    fees_actions.required = True

    quote = fees_actions.add_parser("quote", help="Fees of one platform for a "
                                                  "sale")
    quote.add_argument("--platform", type=Platform, default=Platform.E,
                       help="Platform, E or Y [default: E]")
    quote.add_argument("--opening", type=money, required=True,
                       help="Opening value in dollars")
    quote.add_argument("--closing", type=money, required=True,
                       help="Closing value in dollars")
    quote.set_defaults(handler=Run.fees_quote)

    alpha = fees_actions.add_parser(
        "alpha", help="Effective fee premium of eBay over Yahoo!Auctions"
    )
    alpha.add_argument("--opening", type=money, required=True,
                       help="Opening value in dollars")
    alpha.add_argument("--closing", type=money, required=True,
                       help="Closing value in dollars")
    alpha.set_defaults(handler=Run.fees_alpha)

    invert = fees_actions.add_parser(
        "invert", help="Smallest closing value with at most a given premium"
    )
    invert.add_argument("--alpha", type=float, required=True,
                        help="Target premium as a fraction")
    invert.add_argument("--opening", type=money, required=True,
                        help="Opening value in dollars")
    invert.set_defaults(handler=Run.fees_invert)

    # data
    data_parser = commands.add_parser("data", help="Weekly panel handling")
    data_actions = data_parser.add_subparsers(dest="action", metavar="ACTION")
    data_actions.required = True

    for name, handler, help_text in (
            ("parse", Run.data_parse, "Validate a panel CSV file"),
            ("stats", Run.data_stats, "Weekly averages of a panel")):
        sub = data_actions.add_parser(name, help=help_text)
        sub.add_argument("--panel", required=True,
                         help="Panel CSV file, or - to read stdin")
        sub.set_defaults(handler=handler)

    synth = data_actions.add_parser("synth", help="Write a synthetic panel")
    synth.add_argument("--canonical", action="store_true", default=False,
                       help="Write the deterministic replication panel "
                            "[default: %(default)s]")
    synth.add_argument("--metric", type=metric, default=UsageMetric.UNIQUE_VISITORS,
                       help="Usage metric to generate: uv or pv [default: uv]")
    synth.add_argument("--noise-sd", type=float, default=0.05,
                       help="Standard deviation of log usage noise "
                            "[default: %(default)s]")
    synth.add_argument("-o", "--output",
                       help="File to write to [default: standard output]")
    synth.set_defaults(handler=Run.data_synth)

    # estimate
    est_parser = commands.add_parser("estimate", help="OLS estimation")
    est_actions = est_parser.add_subparsers(dest="action", metavar="ACTION")
    est_actions.required = True

    revenue = est_actions.add_parser("revenue",
                                     help="Elasticity of expected revenue")
    revenue.add_argument("--alpha", type=float, default=0.04,
                         help="Effective fee premium [default: %(default)s]")
    revenue.add_argument("--gamma", type=float, default=1.0,
                         help="Bidder proportionality constant "
                              "[default: %(default)s]")
    revenue.set_defaults(handler=Run.estimate_revenue)

    usage = est_actions.add_parser("usage", help="Website usage equation")
    usage.set_defaults(handler=Run.estimate_usage)

    for sub in (revenue, usage):
        sub.add_argument("--panel", required=True,
                         help="Panel CSV file, or - to read stdin")
        sub.add_argument("--metric", type=metric,
                         default=UsageMetric.UNIQUE_VISITORS,
                         help="Usage metric: uv or pv [default: uv]")

    # equilibrium
    eq_parser = commands.add_parser("equilibrium",
                                    help="Equilibrium and feedback analysis "
                                         "of the calibrated 2001 market")
    eq_actions = eq_parser.add_subparsers(dest="action", metavar="ACTION")
    eq_actions.required = True

    eq_solve = eq_actions.add_parser("solve", help="Solve for equilibria")
    eq_solve.set_defaults(handler=Run.equilibrium_solve,
                          closure=FIXED_TOTAL)
    dynamics = eq_actions.add_parser("dynamics",
                                     help="Listing dynamics from a perturbed "
                                          "state (elastic entry)")
    dynamics.add_argument("--perturb-e", type=float, default=0.05,
                          help="Relative perturbation of eBay listings "
                               "[default: %(default)s]")
    dynamics.add_argument("--perturb-y", type=float, default=-0.05,
                          help="Relative perturbation of Yahoo listings "
                               "[default: %(default)s]")
    dynamics.set_defaults(handler=Run.equilibrium_dynamics)
    counterfactual = eq_actions.add_parser(
        "counterfactual",
        help="Fall 2000 fees (Yahoo!Auctions free) against the current "
             "schedules"
    )
    counterfactual.set_defaults(handler=Run.equilibrium_counterfactual,
                                closure=ELASTIC_ENTRY)

    for sub in (eq_solve, dynamics, counterfactual):
        sub.add_argument("--metric", type=metric,
                         default=UsageMetric.UNIQUE_VISITORS,
                         help="Usage metric: uv or pv [default: uv]")
        add_solver_flags(sub)
    for sub in (eq_solve, counterfactual):
        sub.add_argument("--closure", choices=[FIXED_TOTAL, ELASTIC_ENTRY],
                         help="Closure of total listing supply "
                              "[default: {}]".format(sub.get_default("closure")))

    # replicate
    rep = commands.add_parser("replicate",
                              help="Run the full replication")
    rep.add_argument("--replications", type=int, default=200,
                     help="Monte Carlo replications [default: %(default)s]")
    rep.add_argument("--noise-sd", type=float, default=0.05,
                     help="Monte Carlo log usage noise [default: %(default)s]")
    add_solver_flags(rep)
    rep.set_defaults(handler=Run.replicate)
    return parser


SOLVER_FLAGS = {
    "tolerance": "solver.tolerance",
    "damping": "solver.damping",
    "grid_points": "solver.grid_points",
    "max_periods": "solver.max_periods",
    "elasticity": "solver.elasticity",
}


def add_solver_flags(parser):
    parser.add_argument("--tolerance", type=float,
                        help="Solver tolerance [default: 1e-10]")
    parser.add_argument("--damping", type=float,
                        help="Damping of the entry dynamics [default: 0.2]")
    parser.add_argument("--grid-points", type=int,
                        help="Share grid size [default: 512]")
    parser.add_argument("--max-periods", type=int,
                        help="Iteration budget of the entry dynamics "
                             "[default: 10000]")
    parser.add_argument("--elasticity", type=float,
                        help="Listing supply elasticity [default: 1.0]")


def run(argv=None):
    """
    Run the command line interface and return the exit status
    """
    argv = sys.argv[1:] if argv is None else argv
    try:
        parser = get_parser()
        args = parser.parse_args(argv)

        logging.basicConfig(
            stream=sys.stderr, format="%(levelname)s: %(message)s",
            level=logging.DEBUG if args.verbose else logging.WARNING
        )

        flags = {key: getattr(args, attr, None)
                 for attr, key in SOLVER_FLAGS.items()}
        config_text = read_text(args.config) if args.config else None
        config = resolve_config(config_text, args.overrides, flags)

        command = args.command + (" " + args.action
                                  if getattr(args, "action", None) else "")
        header = [("command", command), ("seed", args.seed)] + config.items()

        result = args.handler(Run(args, config))
        if isinstance(result, str):
            text = "".join("# {} = {}\n".format(k, v) for k, v in header) + \
                result
        else:
            text = ReportBuilder().render_report(result, args.format, header)

        output = getattr(args, "output", None)
        if output:
            with open(output, "w", encoding="utf-8") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    except InvalidInputError as ex:
        print("ERROR: {}".format(ex), file=sys.stderr)
        return EXIT_INVALID
    except (NoSolutionError, EstimationError, EquilibriumError) as ex:
        print("ERROR: {}".format(ex), file=sys.stderr)
        return EXIT_SOLVER
    except OSError as ex:
        print("ERROR: {}".format(ex), file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main():
    sys.exit(run())
