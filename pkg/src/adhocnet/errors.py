"""Exception types shared across the package."""


class AdHocNetError(Exception):
    pass


class InvalidParameterError(AdHocNetError, ValueError):
    pass


class UnreachablePairError(AdHocNetError):
    def __init__(self, source, target):
        super().__init__(f"node {target} is unreachable from node {source}")
        self.pair = (source, target)


class DegenerateNodeError(AdHocNetError):
    pass


class RouteNotComputedError(AdHocNetError, KeyError):
    pass


class SimConfigError(AdHocNetError, ValueError):
    pass


class BracketError(AdHocNetError):
    pass


class FitError(AdHocNetError, ValueError):
    pass
