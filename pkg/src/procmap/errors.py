"""Exception types raised across the package."""


class ProcmapError(Exception):
    """Base class for all errors raised by procmap."""


class ParseError(ProcmapError, ValueError):
    """Malformed input document. Carries the 1-based line number when known."""

    def __init__(self, message, line=None, source=None):
        self.message = message
        self.line = line
        self.source = source
        super().__init__(str(self))

    def __str__(self):
        where = []
        if self.source is not None:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        if where:
            return f"{':'.join(where)}: {self.message}"
        return self.message

    def with_source(self, source):
        """Return a copy of this error tagged with a file name."""
        err = type(self).__new__(type(self))
        ParseError.__init__(err, self.message, self.line, source)
        return err


class AsymmetricEdge(ParseError):
    pass


class SelfLoop(ParseError):
    pass


class BadWeight(ParseError):
    pass


class TopologyError(ProcmapError, ValueError):
    pass


class NotATree(TopologyError):
    pass


class AllRouters(TopologyError):
    pass


class BadLink(TopologyError):
    pass


class BadFactor(TopologyError):
    pass


class RoutingError(ProcmapError):
    pass


class MissingRoute(RoutingError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidPath(RoutingError, ValueError):
    pass


class InconsistentRoute(RoutingError, ValueError):
    pass


class InfeasibleMapping(ProcmapError, ValueError):
    pass


class InfeasibleTarget(InfeasibleMapping):
    pass


class Infeasible(ProcmapError):
    """No feasible mapping exists (nonempty graph, no compute bins)."""


class TooLarge(ProcmapError):
    """Instance exceeds the exact solver's enumeration budget."""
