"""
Flat `key = value` configuration: parsing, key validation and resolution of
defaults, config files, `--set` overrides and dedicated flags.
"""
import re
import logging

from listing_market.exceptions import ConfigError

logger = logging.getLogger(__name__)

PARAMETER_KEYS = ("rev.a", "rev.b", "rev.gamma", "rev.xi.Y", "use.beta1",
                  "use.beta2", "use.c", "use.eta.E", "use.eta.Y")

SCHEDULE_KEY = re.compile(r"^(insertion|finalvalue)\.(E|Y)\.(\d+)$")

DEFAULTS = {
    "solver.tolerance": "1e-10",
    "solver.damping": "0.2",
    "solver.grid_points": "512",
    "solver.max_periods": "10000",
    "solver.elasticity": "1.0",
    "scenario.opening": "15.00",
    "scenario.closing": "50.00",
}


def is_known_key(key):
    return (key in PARAMETER_KEYS or key in DEFAULTS or
            SCHEDULE_KEY.match(key) is not None)


def parse_entry(string):
    """
    Split a string of the form '<key>=<value>' and return (key, value) with
    whitespace stripped. Raise ConfigError if there is no '=' or the key is
    empty
    """
    key, sep, value = string.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError("Invalid entry '{}'. Should be of the form "
                          "'<key>=<value>'".format(string.strip()))
    return key, value.strip()


def parse_config(text, check_keys=True):
    """
    Parse the text of a config file and return a dict of entries. Later lines
    override earlier ones
    """
    entries = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            key, value = parse_entry(line)
        except ConfigError as ex:
            raise ConfigError("line {}: {}".format(line_number, ex))
        if check_keys and not is_known_key(key):
            raise ConfigError("line {}: unknown key '{}'"
                              .format(line_number, key))
        if key in entries:
            logger.debug("Key '%s' redefined on line %d", key, line_number)
        entries[key] = value
    return entries


class ResolvedConfig(object):
    """
    The fully resolved set of configuration entries for one run
    """

    def __init__(self, entries):
        self.entries = dict(entries)

    def __getitem__(self, key):
        return self.entries[key]

    def __contains__(self, key):
        return key in self.entries

    def get_float(self, key):
        try:
            return float(self.entries[key])
        except ValueError:
            raise ConfigError("'{}' must be a number, got '{}'"
                              .format(key, self.entries[key]))

    def get_int(self, key):
        try:
            return int(self.entries[key])
        except ValueError:
            raise ConfigError("'{}' must be an integer, got '{}'"
                              .format(key, self.entries[key]))

    def parameter_entries(self):
        return {k: v for k, v in self.entries.items() if k in PARAMETER_KEYS}

    def schedule_entries(self):
        return {k: v for k, v in self.entries.items() if SCHEDULE_KEY.match(k)}

    def items(self):
        """
        Return (key, value) pairs sorted by key
        """
        return sorted(self.entries.items())


def resolve_config(config_text=None, overrides=(), flags=None):
    """
    Merge built-in defaults, the text of a config file, a sequence of
    '<key>=<value>' override strings and a dict of flag values (None values
    are ignored), in increasing order of precedence
    """
    entries = dict(DEFAULTS)
    if config_text is not None:
        entries.update(parse_config(config_text))

    for string in overrides:
        key, value = parse_entry(string)
        if not is_known_key(key):
            raise ConfigError("Unknown key '{}'".format(key))
        entries[key] = value

    for key, value in (flags or {}).items():
        if value is None:
            continue
        if not is_known_key(key):
            raise ConfigError("Unknown key '{}'".format(key))
        entries[key] = str(value)
    return ResolvedConfig(entries)
