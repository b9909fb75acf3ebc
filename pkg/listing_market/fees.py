"""
Listing fee schedules of the two auction sites: insertion fee brackets,
marginal final value fee tiers, total fees and the effective ad valorem fee
premium of eBay over Yahoo!Auctions.

All arithmetic is done on integer cents and `Decimal`; amounts are only
rounded to the cent (half-up) by `final_value_fee`.
"""
import logging
from collections import namedtuple
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP

from listing_market.config import SCHEDULE_KEY, parse_config
from listing_market.exceptions import (InvalidInputError, NoSolutionError,
                                       ConfigError)
from listing_market.model import Platform, PlatformFees

logger = logging.getLogger(__name__)

CENT = Decimal("0.01")
HUNDRED = Decimal(100)


class Money(namedtuple("Money", ["cents"])):
    """
    A non-negative amount of US currency held as integer cents
    """
    __slots__ = ()

    def __new__(cls, cents):
        if isinstance(cents, bool) or not isinstance(cents, int):
            raise InvalidInputError("Money must be a whole number of cents, "
                                    "got {!r}".format(cents))
        if cents < 0:
            raise InvalidInputError("Money cannot be negative, got {} cents"
                                    .format(cents))
        return super().__new__(cls, cents)

    @property
    def dollars(self):
        return Decimal(self.cents) / HUNDRED

    def __str__(self):
        return "${}".format(self.dollars.quantize(CENT))


# `upper` is None for an unbounded bracket/tier
BracketFee = namedtuple("BracketFee", ["lower", "upper", "fee"])
MarginalTier = namedtuple("MarginalTier", ["lower", "upper", "rate"])
FeeSchedule = namedtuple("FeeSchedule", ["platform", "insertion", "final_value"])
# Totals and differences are exact Decimal dollars
FeeComparison = namedtuple("FeeComparison", [
    "opening", "closing", "total_high", "total_low", "difference", "alpha_bar"
])


def _brackets(fees_in_cents):
    bounds = [(1, 999), (1000, 2499), (2500, 4999), (5000, 19999),
              (20000, None)]
    return tuple(
        BracketFee(Money(lower), Money(upper) if upper is not None else None,
                   Money(fee))
        for (lower, upper), fee in zip(bounds, fees_in_cents)
    )


EBAY_2001 = FeeSchedule(
    platform=Platform.E,
    insertion=_brackets([30, 55, 110, 220, 330]),
    final_value=(
        MarginalTier(Money(0), Money(2500), Decimal("0.05")),
        MarginalTier(Money(2500), Money(100000), Decimal("0.025")),
        MarginalTier(Money(100000), None, Decimal("0.0125")),
    )
)

YAHOO_2001 = FeeSchedule(
    platform=Platform.Y,
    insertion=_brackets([20, 35, 75, 150, 150]),
    final_value=()
)

# Yahoo!Auctions charged nothing before 2001
YAHOO_FALL_2000 = FeeSchedule(
    platform=Platform.Y,
    insertion=_brackets([0, 0, 0, 0, 0]),
    final_value=()
)

SCHEDULES_2001 = {Platform.E: EBAY_2001, Platform.Y: YAHOO_2001}


def parse_money(text):
    """
    Convert a dollar amount such as '15.00' or '$9.99' to Money. At most two
    decimal places are accepted
    """
    stripped = text.strip().lstrip("$")
    try:
        amount = Decimal(stripped)
    except InvalidOperation:
        raise InvalidInputError("Invalid dollar amount '{}'".format(text))
    if not amount.is_finite():
        raise InvalidInputError("Invalid dollar amount '{}'".format(text))
    if amount.as_tuple().exponent < -2:
        raise InvalidInputError("Dollar amount '{}' has more than two decimal "
                                "places".format(text))
    if amount < 0:
        raise InvalidInputError("Dollar amount '{}' is negative".format(text))
    return Money(int(amount * HUNDRED))


def format_dollars(amount):
    """
    Format an exact Decimal dollar amount with at least two decimal places
    and no trailing zeros beyond them: 2.425, 0.35, 3.00
    """
    normalized = amount.normalize()
    if normalized.as_tuple().exponent > -2:
        normalized = normalized.quantize(CENT)
    return str(normalized)


def insertion_fee(schedule, opening_value):
    """
    Return the insertion fee of the bracket containing `opening_value`
    """
    if opening_value.cents < 1:
        raise InvalidInputError("Opening value must be at least $0.01, got {}"
                                .format(opening_value))
    for bracket in schedule.insertion:
        if (bracket.lower.cents <= opening_value.cents and
                (bracket.upper is None or
                 opening_value.cents <= bracket.upper.cents)):
            return bracket.fee
    raise InvalidInputError("No insertion fee bracket of platform {} contains "
                            "{}".format(schedule.platform.value, opening_value))


def final_value_fee_exact(schedule, closing_value):
    """
    Return the unrounded final value fee in dollars as a Decimal. Each rate
    applies only to the slice of the closing value within its tier
    """
    total_cents = Decimal(0)
    for tier in schedule.final_value:
        if closing_value.cents <= tier.lower.cents:
            break
        top = closing_value.cents
        if tier.upper is not None:
            top = min(top, tier.upper.cents)
        total_cents += tier.rate * (top - tier.lower.cents)
    return total_cents / HUNDRED


def final_value_fee(schedule, closing_value):
    """
    Return the final value fee rounded half-up to the cent
    """
    exact_cents = final_value_fee_exact(schedule, closing_value) * HUNDRED
    return Money(int(exact_cents.quantize(Decimal(1), rounding=ROUND_HALF_UP)))


def total_fee(schedule, opening_value, closing_value):
    """
    Return insertion fee plus unrounded final value fee, in dollars, for an
    item that sold at `closing_value`
    """
    if closing_value.cents < opening_value.cents:
        raise InvalidInputError(
            "Closing value {} is below the opening value {}; the item would "
            "not have sold".format(closing_value, opening_value)
        )
    return (insertion_fee(schedule, opening_value).dollars +
            final_value_fee_exact(schedule, closing_value))


def compare_fees(opening_value, closing_value, high=EBAY_2001, low=YAHOO_2001):
    """
    Return a FeeComparison of the total fees of two schedules for the same
    sale
    """
    if closing_value.cents == 0:
        raise InvalidInputError("Closing value must be positive")
    total_high = total_fee(high, opening_value, closing_value)
    total_low = total_fee(low, opening_value, closing_value)
    difference = total_high - total_low
    return FeeComparison(opening=opening_value, closing=closing_value,
                         total_high=total_high, total_low=total_low,
                         difference=difference,
                         alpha_bar=difference / closing_value.dollars)


def effective_alpha_bar(opening_value, closing_value, high=EBAY_2001,
                        low=YAHOO_2001):
    """
    Return the total fee differential between `high` and `low` as an exact
    fraction of the closing value
    """
    return compare_fees(opening_value, closing_value, high, low).alpha_bar


def _last_rate(schedule):
    if not schedule.final_value:
        return Decimal(0)
    return schedule.final_value[-1].rate


def implied_closing_value(alpha_target, opening_value, high=EBAY_2001,
                          low=YAHOO_2001):
    """
    Return the smallest closing value (to the cent) at which
    `effective_alpha_bar` is at most `alpha_target`.

    For a fixed opening value the premium decreases towards the difference of
    the two schedules' top marginal rates, so targets at or below that floor,
    or above the premium at closing = opening, have no solution.
    """
    target = Decimal(str(alpha_target))
    floor = _last_rate(high) - _last_rate(low)
    ceiling = effective_alpha_bar(opening_value, opening_value, high, low)
    if not floor < target <= ceiling:
        raise NoSolutionError(
            "Target {} is not achievable at opening value {}; achievable range "
            "is ({}, {}]".format(target, opening_value, floor, ceiling)
        )

    def alpha(cents):
        return effective_alpha_bar(opening_value, Money(cents), high, low)

    lo = opening_value.cents
    if alpha(lo) <= target:
        return opening_value

    hi = max(2 * lo, lo + 1)
    doublings = 0
    while alpha(hi) > target:
        hi *= 2
        doublings += 1
        if doublings > 64:
            raise NoSolutionError("Target {} not reached below {}"
                                  .format(target, Money(hi)))

    # Invariant: alpha(lo) > target >= alpha(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if alpha(mid) > target:
            lo = mid
        else:
            hi = mid
    logger.debug("Implied closing value for %s: %d cents", target, hi)
    return Money(hi)


def platform_fees(schedule, opening_value, closing_value):
    """
    Express a schedule at a median scenario as an ad valorem rate (final
    value fee over closing value) and an insertion fee in dollars
    """
    if closing_value.cents == 0:
        raise InvalidInputError("Closing value must be positive")
    alpha = final_value_fee_exact(schedule, closing_value) / closing_value.dollars
    fee = insertion_fee(schedule, opening_value).dollars
    return PlatformFees(alpha=float(alpha), insertion=float(fee))


def scenario_fees(schedules, opening_value, closing_value):
    """
    Return a dict mapping Platform to PlatformFees for each schedule in
    `schedules` at the given median scenario
    """
    return {s.platform: platform_fees(s, opening_value, closing_value)
            for s in schedules}


def _parse_bound(text):
    text = text.strip()
    if text == "" or text.lower() == "inf":
        return None
    return parse_money(text)


def _check_contiguous(platform, kind, tiers, first_lower, gap):
    expected = first_lower
    for i, tier in enumerate(tiers):
        if expected is None or tier.lower.cents != expected:
            raise ConfigError(
                "{} tiers of platform {} are not contiguous at tier {}"
                .format(kind, platform.value, i + 1)
            )
        if tier.upper is not None and tier.upper.cents < tier.lower.cents:
            raise ConfigError("{} tier {} of platform {} has upper bound below "
                              "lower bound".format(kind, i + 1, platform.value))
        expected = None if tier.upper is None else tier.upper.cents + gap
    if tiers and tiers[-1].upper is not None:
        raise ConfigError("Last {} tier of platform {} must be unbounded"
                          .format(kind, platform.value))


def schedules_from_entries(entries):
    """
    Build fee schedules from flat entries such as
    'insertion.E.1' -> '0.01,9.99,0.30' and 'finalvalue.E.1' -> '0,25,0.05'.

    Return a dict mapping Platform to FeeSchedule for every platform with at
    least one insertion bracket.
    """
    found = {p: {"insertion": {}, "finalvalue": {}} for p in Platform}
    for key, value in entries.items():
        match = SCHEDULE_KEY.match(key)
        if not match:
            raise ConfigError("'{}' is not a fee schedule key".format(key))
        kind, platform, index = match.groups()
        parts = value.split(",")
        if len(parts) != 3:
            raise ConfigError("'{}' should have three comma separated fields "
                              "'lower,upper,value'".format(key))
        try:
            lower = parse_money(parts[0])
            upper = _parse_bound(parts[1])
            if kind == "insertion":
                tier = BracketFee(lower, upper, parse_money(parts[2]))
            else:
                rate = Decimal(parts[2].strip())
                if not Decimal(0) <= rate <= Decimal(1):
                    raise InvalidInputError("rate must be in [0, 1]")
                tier = MarginalTier(lower, upper, rate)
        except (InvalidInputError, InvalidOperation) as ex:
            raise ConfigError("Invalid value for '{}': {}".format(key, ex))
        found[Platform(platform)][kind][int(index)] = tier

    schedules = {}
    for platform, kinds in found.items():
        insertion = tuple(kinds["insertion"][k]
                          for k in sorted(kinds["insertion"]))
        final_value = tuple(kinds["finalvalue"][k]
                            for k in sorted(kinds["finalvalue"]))
        if not insertion:
            if final_value:
                raise ConfigError("Platform {} has final value tiers but no "
                                  "insertion brackets".format(platform.value))
            continue
        _check_contiguous(platform, "insertion", insertion, 1, 1)
        _check_contiguous(platform, "final value", final_value, 0, 0)
        schedules[platform] = FeeSchedule(platform, insertion, final_value)
    return schedules


def load_schedules(text):
    """
    Parse the text of a schedule file and return a dict mapping Platform to
    FeeSchedule
    """
    return schedules_from_entries(parse_config(text, check_keys=False))


def schedule_entries(schedule):
    """
    Return the flat (key, value) entries describing `schedule`
    """
    def bound(money):
        return "inf" if money is None else str(money.dollars.quantize(CENT))

    p = schedule.platform.value
    entries = []
    for i, b in enumerate(schedule.insertion, start=1):
        entries.append(("insertion.{}.{}".format(p, i), "{},{},{}".format(
            bound(b.lower), bound(b.upper), bound(b.fee))))
    for i, t in enumerate(schedule.final_value, start=1):
        entries.append(("finalvalue.{}.{}".format(p, i), "{},{},{}".format(
            bound(t.lower), bound(t.upper), t.rate)))
    return entries
