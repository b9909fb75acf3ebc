"""
Weekly two-platform panel of listings and website usage: CSV ingestion and
serialisation, the missing-week policy, summary statistics and synthetic
panels for estimator validation.
"""
import io
import csv
import bisect
import logging
from collections import namedtuple

import numpy as np

from listing_market.exceptions import InvalidInputError, PanelParseError
from listing_market.model import Platform, PLATFORMS, UsageMetric, USAGE_ESTIMATES

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["week", "site", "listings_thousands",
               "unique_visitors_thousands", "page_views_thousands"]

# Weekly averages in 2001, in thousands
LISTINGS_2001 = {Platform.E: 5822.0, Platform.Y: 3349.0}
UNIQUE_VISITORS_2001 = {Platform.E: 6250.0, Platform.Y: 527.0}
# eBay's figure is printed inconsistently; 131.2 page views per listing over
# 5822 thousand listings gives ~763,638 thousand
PAGE_VIEWS_2001 = {Platform.E: 763638.0, Platform.Y: 1726.0}
LISTINGS_FALL_2000 = {Platform.E: 5671.0, Platform.Y: 4045.0}

CANONICAL_WEEKS = 17
CANONICAL_MISSING = frozenset([(9, Platform.E), (1, Platform.Y)])

WeeklyObservation = namedtuple("WeeklyObservation", [
    "week", "site", "listings", "unique_visitors", "page_views"
])

SummaryStats = namedtuple("SummaryStats", [
    "listings", "unique_visitors", "page_views", "uv_per_listing",
    "pv_per_listing", "complete_weeks"
])


def metric_value(obs, metric):
    """
    Return the usage of `obs` in the given metric, or None if it is missing
    """
    if metric is UsageMetric.UNIQUE_VISITORS:
        return obs.unique_visitors
    return obs.page_views


def _sort_key(obs):
    return (obs.week, obs.site.value)


class Panel(object):
    """
    Observations sorted by (week, site), with at most one observation per key
    """

    def __init__(self, observations=()):
        self._keys = []
        self._observations = []
        for obs in observations:
            self.add(obs)

    def add(self, obs):
        """
        Validate an observation and insert it in sort order
        """
        if isinstance(obs.week, bool) or not isinstance(obs.week, int) or \
                obs.week < 1:
            raise InvalidInputError("Week must be a positive integer, got {!r}"
                                    .format(obs.week))
        if not obs.listings > 0:
            raise InvalidInputError(
                "Listings must be positive (week {}, site {}), got {}"
                .format(obs.week, obs.site.value, obs.listings)
            )
        for name, value in (("unique visitors", obs.unique_visitors),
                            ("page views", obs.page_views)):
            if value is not None and not value > 0:
                raise InvalidInputError(
                    "{} must be positive when present (week {}, site {}), got "
                    "{}".format(name, obs.week, obs.site.value, value)
                )

        key = _sort_key(obs)
        idx = bisect.bisect_left(self._keys, key)
        if idx < len(self._keys) and self._keys[idx] == key:
            raise InvalidInputError("Duplicate observation for week {}, site {}"
                                    .format(obs.week, obs.site.value))
        self._keys.insert(idx, key)
        self._observations.insert(idx, obs)

    def __iter__(self):
        return iter(self._observations)

    def __len__(self):
        return len(self._observations)

    def __eq__(self, other):
        return isinstance(other, Panel) and \
            self._observations == other._observations

    def get(self, week, site):
        key = (week, site.value)
        idx = bisect.bisect_left(self._keys, key)
        if idx < len(self._keys) and self._keys[idx] == key:
            return self._observations[idx]
        return None

    def weeks(self):
        return sorted(set(obs.week for obs in self._observations))

    def is_complete(self, week, metric):
        """
        A week is complete for a metric iff both sites report it
        """
        for site in PLATFORMS:
            obs = self.get(week, site)
            if obs is None or metric_value(obs, metric) is None:
                return False
        return True


def _parse_float(field, text, line_number, optional):
    text = text.strip()
    if not text:
        if optional:
            return None
        raise PanelParseError(line_number, "missing value for '{}'"
                              .format(field))
    try:
        return float(text)
    except ValueError:
        raise PanelParseError(line_number, "invalid number '{}' for '{}'"
                              .format(text, field))


def parse_panel(stream):
    """
    Parse a panel from a text stream (or string) in the CSV schema. Lines
    starting with '#' are skipped
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)

    numbered = [(n, line) for n, line in enumerate(stream, start=1)
                if line.strip() and not line.lstrip().startswith("#")]
    panel = Panel()
    if not numbered:
        return panel

    reader = csv.reader(line for _, line in numbered)
    header_number = numbered[0][0]
    header = [h.strip() for h in next(reader)]
    if header != CSV_COLUMNS:
        raise PanelParseError(header_number, "expected header '{}'"
                              .format(",".join(CSV_COLUMNS)))

    for (line_number, _), row in zip(numbered[1:], reader):
        if len(row) != len(CSV_COLUMNS):
            raise PanelParseError(line_number, "expected {} fields, got {}"
                                  .format(len(CSV_COLUMNS), len(row)))
        try:
            week = int(row[0].strip())
        except ValueError:
            raise PanelParseError(line_number, "invalid week '{}'"
                                  .format(row[0]))
        try:
            site = Platform(row[1].strip())
        except ValueError:
            raise PanelParseError(line_number, "site must be E or Y, got '{}'"
                                  .format(row[1]))
        obs = WeeklyObservation(
            week=week,
            site=site,
            listings=_parse_float(CSV_COLUMNS[2], row[2], line_number, False),
            unique_visitors=_parse_float(CSV_COLUMNS[3], row[3], line_number,
                                         True),
            page_views=_parse_float(CSV_COLUMNS[4], row[4], line_number, True)
        )
        try:
            panel.add(obs)
        except InvalidInputError as ex:
            raise PanelParseError(line_number, str(ex))
    return panel


def _format_value(value):
    return "" if value is None else "{:.6g}".format(value)


def serialize_panel(panel):
    """
    Return the CSV text of `panel`, values to 6 significant digits
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for obs in panel:
        writer.writerow([obs.week, obs.site.value, _format_value(obs.listings),
                         _format_value(obs.unique_visitors),
                         _format_value(obs.page_views)])
    return out.getvalue()


def complete_weeks(panel, metric):
    """
    Return a new panel containing only the weeks complete for `metric`
    """
    keep = [w for w in panel.weeks() if panel.is_complete(w, metric)]
    dropped = sorted(set(panel.weeks()) - set(keep))
    if dropped:
        logger.warning("Skipping weeks with missing %s usage: %s",
                       metric.value, ", ".join(str(w) for w in dropped))
    keep = set(keep)
    return Panel(obs for obs in panel if obs.week in keep)


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def summary_stats(panel):
    """
    Per-site means, each taken over the weeks where the quantity is present
    """
    if not len(panel):
        raise InvalidInputError("Cannot summarise an empty panel")

    def per_site(func):
        return {site: _mean(func(obs) for obs in panel if obs.site is site)
                for site in PLATFORMS}

    def ratio(field):
        def func(obs):
            value = getattr(obs, field)
            return None if value is None else value / obs.listings
        return func

    counts = {m: sum(1 for w in panel.weeks() if panel.is_complete(w, m))
              for m in UsageMetric}
    return SummaryStats(
        listings=per_site(lambda obs: obs.listings),
        unique_visitors=per_site(lambda obs: obs.unique_visitors),
        page_views=per_site(lambda obs: obs.page_views),
        uv_per_listing=per_site(ratio("unique_visitors")),
        pv_per_listing=per_site(ratio("page_views")),
        complete_weeks=counts
    )


def synthesize_panel(use, listings, noise_sd, seed, missing=(),
                     metric=UsageMetric.UNIQUE_VISITORS):
    """
    Generate a panel whose `metric` usage follows the usage equation at the
    given weekly listings, times log-normal noise.

    `listings` maps Platform to a sequence of weekly listings (week 1 first).
    `missing` is a collection of (week, Platform) pairs whose usage is left
    out. Noise is drawn for every cell, missing or not, from
    `numpy.random.default_rng(seed)`, so the stream does not depend on the
    missing pattern.
    """
    if noise_sd < 0:
        raise InvalidInputError("Noise standard deviation must be "
                                "non-negative, got {}".format(noise_sd))
    log_l = {}
    for site in PLATFORMS:
        values = np.asarray(listings[site], dtype=float)
        if np.any(values <= 0):
            raise InvalidInputError("Listings must be positive")
        log_l[site] = np.log(values)
    n_weeks = len(log_l[Platform.E])
    if len(log_l[Platform.Y]) != n_weeks:
        raise InvalidInputError("Both sites need the same number of weeks")

    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_sd, size=(n_weeks, len(PLATFORMS)))

    missing = set(missing)
    panel = Panel()
    for col, site in enumerate(PLATFORMS):
        log_u = (use.beta1 * log_l[site] + use.beta2 * log_l[site.rival] +
                 use.c + use.eta[site] + noise[:, col])
        usage = np.exp(log_u)
        for i in range(n_weeks):
            week = i + 1
            value = None if (week, site) in missing else float(usage[i])
            panel.add(WeeklyObservation(
                week=week, site=site, listings=float(np.exp(log_l[site][i])),
                unique_visitors=value if metric is UsageMetric.UNIQUE_VISITORS
                else None,
                page_views=value if metric is UsageMetric.PAGE_VIEWS else None
            ))
    return panel


def _canonical_paths():
    """
    Return (weeks, common, spread, shock) arrays: a seasonal common wiggle,
    a varying log listing ratio and a small alternating usage shock. The
    last two are zero in weeks with missing usage
    """
    weeks = np.arange(1, CANONICAL_WEEKS + 1)
    missing_weeks = set(w for w, _ in CANONICAL_MISSING)
    common = 0.02 * np.sin(2 * np.pi * weeks / CANONICAL_WEEKS)
    spread = np.zeros(CANONICAL_WEEKS)
    shock = np.zeros(CANONICAL_WEEKS)
    complete = [w for w in weeks if w not in missing_weeks]
    for i, week in enumerate(complete):
        spread[week - 1] = 0.038 * ((4 * i) % 15 - 7)
        shock[week - 1] = 0.01 * (-1) ** i
    return weeks, common, spread, shock


def canonical_panel():
    """
    Deterministic 17-week replication panel pinned to the 2001 weekly
    averages.

    Listings carry a +/-2% common seasonal wiggle and a week-to-week varying
    eBay/Yahoo ratio. Common movements in usage follow the reference
    elasticity sum beta1 + beta2 of each metric. Arithmetic means of
    listings, unique visitors and page views equal the published averages.
    eBay usage is missing in week 9 and Yahoo usage in week 1.
    """
    weeks, common, spread, shock = _canonical_paths()
    sign = {Platform.E: 1.0, Platform.Y: -1.0}

    log_l = {}
    for site in PLATFORMS:
        shape = common + sign[site] * spread / 2
        log_l[site] = np.log(LISTINGS_2001[site]) - np.log(np.mean(np.exp(shape))) \
            + shape

    targets = {UsageMetric.UNIQUE_VISITORS: UNIQUE_VISITORS_2001,
               UsageMetric.PAGE_VIEWS: PAGE_VIEWS_2001}
    usage = {}
    for metric, target in targets.items():
        est = USAGE_ESTIMATES[metric]
        scale = est["beta1"] + est["beta2"]
        for site in PLATFORMS:
            present = np.array([(w, site) not in CANONICAL_MISSING
                                for w in weeks])
            shape = log_l[site] + (scale - 1) * common + sign[site] * shock / 2
            level = np.log(target[site]) - np.log(np.mean(np.exp(shape[present])))
            usage[(metric, site)] = np.where(present, np.exp(shape + level),
                                             np.nan)

    panel = Panel()
    for site in PLATFORMS:
        for i, week in enumerate(weeks):
            uv = usage[(UsageMetric.UNIQUE_VISITORS, site)][i]
            pv = usage[(UsageMetric.PAGE_VIEWS, site)][i]
            panel.add(WeeklyObservation(
                week=int(week), site=site,
                listings=float(np.exp(log_l[site][i])),
                unique_visitors=None if np.isnan(uv) else float(uv),
                page_views=None if np.isnan(pv) else float(pv)
            ))
    return panel
