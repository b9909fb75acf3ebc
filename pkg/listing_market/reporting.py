"""
Render result tables as plain text, markdown or CSV. Tables are built from
module outputs by the `*_table` functions; the rendering layer only formats
values.
"""
import io
import csv
from decimal import Decimal
from collections import namedtuple

from jinja2 import Environment, PackageLoader

from listing_market.econometrics import fit_rows
from listing_market.fees import Money, format_dollars
from listing_market.model import PLATFORMS

FORMATS = ("text", "csv", "markdown")

Table = namedtuple("Table", ["title", "columns", "rows", "notes"],
                   defaults=((),))


def format_cell(value):
    if value is None:
        return ""
    if isinstance(value, Money):
        return format_dollars(value.dollars)
    if isinstance(value, Decimal):
        return format_dollars(value) if value.as_tuple().exponent >= -3 \
            else str(value.normalize())
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return "{:.6g}".format(value)
    return str(value)


class ReportBuilder(object):

    def __init__(self):
        self.env = Environment(loader=PackageLoader("listing_market", "templates"))
        self.env.trim_blocks = True
        self.env.lstrip_blocks = True
        self.env.keep_trailing_newline = True

    def render(self, template_name, **kwargs):
        """
        Render a template with the given context
        """
        template = self.env.get_template(template_name)
        return template.render(**kwargs)

    def text_layout(self, table):
        """
        Return (header, rows) as lines with columns padded to a common width
        """
        cells = [[format_cell(v) for v in row] for row in table.rows]
        widths = [len(c) for c in table.columns]
        for row in cells:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]

        def line(values):
            return "  ".join(v.ljust(w) for v, w in zip(values, widths)).rstrip()
        return line(table.columns), [line(row) for row in cells]

    def text(self, tables, header=()):
        laid_out = []
        for table in tables:
            head, rows = self.text_layout(table)
            laid_out.append({"title": table.title, "header": head,
                             "rows": rows, "notes": table.notes})
        return self.render("report.txt", header=header, tables=laid_out)

    def markdown(self, tables, header=()):
        laid_out = []
        for table in tables:
            laid_out.append({
                "title": table.title,
                "header": "| {} |".format(" | ".join(table.columns)),
                "rule": "|{}".format(" --- |" * len(table.columns)),
                "rows": ["| {} |".format(" | ".join(format_cell(v) for v in row))
                         for row in table.rows],
                "notes": table.notes
            })
        return self.render("report.md", header=header, tables=laid_out)

    def csv(self, tables, header=()):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        for key, value in header:
            out.write("# {} = {}\n".format(key, value))
        for i, table in enumerate(tables):
            if i > 0:
                out.write("\n")
            if len(tables) > 1:
                out.write("# {}\n".format(table.title))
            writer.writerow(table.columns)
            for row in table.rows:
                writer.writerow([format_cell(v) for v in row])
        return out.getvalue()

    def render_report(self, tables, fmt="text", header=()):
        """
        Render a sequence of Tables in the given format, preceded by the
        (key, value) pairs of `header`
        """
        if fmt not in FORMATS:
            raise ValueError("Unknown output format '{}'".format(fmt))
        return getattr(self, fmt)(list(tables), list(header))


def fee_quote_table(schedule, opening, closing, insertion, exact, rounded,
                    total):
    return Table(
        title="Fee quote",
        columns=["platform", "opening", "closing", "insertion_fee",
                 "final_value_fee_exact", "final_value_fee", "total_fee"],
        rows=[[schedule.platform.value, opening, closing, insertion, exact,
               rounded, total]]
    )


def schedule_table(schedule):
    rows = []
    for b in schedule.insertion:
        rows.append(["insertion", b.lower, b.upper or "and up", b.fee])
    for t in schedule.final_value:
        rows.append(["final value", t.lower, t.upper or "and up", t.rate])
    return Table(title="Fee schedule {}".format(schedule.platform.value),
                 columns=["kind", "lower", "upper", "fee_or_rate"], rows=rows)


def fit_table(title, fit, notes=()):
    """
    Rows term/estimate/std_error, followed by n and R^2 as notes
    """
    rows = [list(row) for row in fit_rows(fit)]
    notes = list(notes) + ["n = {}".format(fit.n_observations)]
    if fit.r_squared is not None:
        notes.append("R^2 = {}".format(format_cell(fit.r_squared)))
    return Table(title=title, columns=["term", "estimate", "std_error"],
                 rows=rows, notes=tuple(notes))


def summary_table(stats):
    rows = []
    for site in PLATFORMS:
        rows.append([site.value, stats.listings[site],
                     stats.unique_visitors[site], stats.page_views[site],
                     stats.uv_per_listing[site], stats.pv_per_listing[site]])
    notes = tuple("complete weeks ({}) = {}".format(m.value, n)
                  for m, n in stats.complete_weeks.items())
    return Table(title="Weekly averages (thousands)",
                 columns=["site", "listings", "unique_visitors", "page_views",
                          "uv_per_listing", "pv_per_listing"],
                 rows=rows, notes=notes)


def state_row(state):
    return [state.listings[s] for s in PLATFORMS] + \
        [state.usage[s] for s in PLATFORMS]


STATE_COLUMNS = ["listings_E", "listings_Y", "usage_E", "usage_Y"]


def solution_tables(title, solution, shares, residuals):
    """
    One row per root (with its eBay share and residual), plus the stability
    record of the designated state
    """
    rows = []
    for root, share, residual in zip(solution.roots, shares, residuals):
        rows.append([share] + state_row(root) + [residual,
                                                 root is solution.state])
    roots = Table(
        title="{} ({})".format(title, solution.closure),
        columns=["share_E"] + STATE_COLUMNS + ["residual", "designated"],
        rows=rows,
        notes=("periods = {}".format(solution.periods),)
    )
    return [roots, stability_table(solution.stability)]


def stability_table(report):
    rows = [["own_exponent", report.own_exponent],
            ["reallocation_exponent", report.reallocation_exponent],
            ["feedback_sign", report.feedback_sign],
            ["map_spectral_radius", report.map_spectral_radius],
            ["damped_spectral_radius", report.damped_spectral_radius]]
    if report.share_slope is not None:
        rows.append(["share_slope", report.share_slope])
    rows.append(["classification", report.label])
    return Table(title="Feedback stability", columns=["quantity", "value"],
                 rows=rows)


def trajectory_table(trajectory, distances):
    rows = [[period] + state_row(state) + [distance]
            for period, (state, distance) in
            enumerate(zip(trajectory.states, distances))]
    return Table(
        title="Listing dynamics",
        columns=["period"] + STATE_COLUMNS + ["log_distance"],
        rows=rows,
        notes=("converged = {}".format(format_cell(trajectory.converged)),
               "diverged = {}".format(format_cell(trajectory.diverged)),
               "periods = {}".format(trajectory.periods))
    )


def counterfactual_tables(result, before_share, after_share):
    """
    Before, after and delta blocks of a counterfactual
    """
    blocks = []
    for label, solution, share in (("before", result.before, before_share),
                                   ("after", result.after, after_share)):
        blocks.append(Table(
            title="Counterfactual {} ({})".format(label, result.closure),
            columns=["share_E"] + STATE_COLUMNS,
            rows=[[share] + state_row(solution.state)]
        ))
    blocks.append(Table(
        title="Counterfactual delta ({})".format(result.closure),
        columns=["share_E"] + STATE_COLUMNS,
        rows=[[result.share_delta] +
              [result.listing_deltas[s] for s in PLATFORMS] +
              [result.usage_deltas[s] for s in PLATFORMS]],
        notes=counterfactual_notes(result)
    ))
    return blocks


def counterfactual_notes(result):
    notes = ["{} root: {}".format(label, solution.stability.label)
             for label, solution in (("before", result.before),
                                     ("after", result.after))]
    if any(solution.stability.classification.startswith("unstable")
           for solution in (result.before, result.after)):
        notes.append("deltas compare unstable roots; comparative statics "
                     "are reversed")
    return tuple(notes)


def coverage_table(report):
    rows = [[term, report.truth[term], report.mean_estimates[term],
             report.mean_standard_errors[term], report.coverage[term]]
            for term in ("c", "beta1", "beta2")]
    return Table(
        title="Monte Carlo coverage",
        columns=["term", "truth", "mean_estimate", "mean_std_error",
                 "coverage"],
        rows=rows,
        notes=("replications = {}".format(report.replications),
               "interval = +/- {} standard errors".format(
                   format_cell(report.width)))
    )
