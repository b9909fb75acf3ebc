class ListingMarketError(Exception):
    """
    Base class for all errors raised by listing_market
    """


class InvalidInputError(ListingMarketError):
    """
    An input value violates a precondition
    """


class PanelParseError(InvalidInputError):
    """
    A row of a panel CSV file could not be parsed
    """
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__("line {}: {}".format(line_number, message))


class ConfigError(InvalidInputError):
    """
    A configuration entry is malformed or uses an unknown key
    """


class NoSolutionError(ListingMarketError):
    """
    A fee inversion target lies outside the achievable range
    """


class EstimationError(ListingMarketError):
    """
    A regression could not be estimated
    """


class SingularDesignError(EstimationError):
    """
    The design matrix does not have full column rank
    """


class InsufficientDataError(EstimationError):
    """
    There are not enough observations for the requested regression
    """


class EquilibriumError(ListingMarketError):
    """
    An equilibrium could not be found
    """


class NoInteriorEquilibriumError(EquilibriumError):
    """
    The indifference residual does not change sign on the share grid
    """
    def __init__(self, residual_low, residual_high):
        self.residual_low = residual_low
        self.residual_high = residual_high
        super().__init__(
            "No interior equilibrium: indifference residual is {:.6g} at the "
            "lowest eBay share and {:.6g} at the highest (corner solution)"
            .format(residual_low, residual_high)
        )


class NoEquilibriumError(EquilibriumError):
    """
    Net listing revenue is non-positive while the outside option is positive
    """


class InstabilityError(EquilibriumError):
    """
    The listing dynamics diverged. `trajectory` holds the path up to the point
    of divergence
    """
    def __init__(self, message, trajectory):
        self.trajectory = trajectory
        super().__init__(message)


class ConvergenceError(EquilibriumError):
    """
    An iterative solver ran out of iterations
    """


class ScenarioError(EquilibriumError):
    """
    A counterfactual scenario failed to solve
    """
    def __init__(self, label, error):
        self.label = label
        self.error = error
        super().__init__("{} scenario: {}".format(label, error))
