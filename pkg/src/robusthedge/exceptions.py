"""Exception hierarchy shared by every module."""


class RobustHedgeError(Exception):
    """Base class for errors raised by this package."""


class ParseError(RobustHedgeError):
    """Model or payoff file could not be parsed."""


class ValidationError(RobustHedgeError):
    """A structural invariant of the market model is violated."""


class DimensionError(RobustHedgeError, ValueError):
    """Inconsistent array shapes handed to the LP solver."""


class UnsupportedConstraint(RobustHedgeError):
    pass


class ArbitrageAtNode(RobustHedgeError):
    def __init__(self, node_id, report=None):
        super().__init__(f"no-arbitrage fails at node {node_id!r}")
        self.node_id = node_id
        self.report = report


class ArbitrageDetected(RobustHedgeError):
    def __init__(self, failing_nodes):
        ids = ", ".join(repr(r.node_id) for r in failing_nodes)
        super().__init__(f"quasi-sure arbitrage at reachable node(s): {ids}")
        self.failing_nodes = failing_nodes


class UnboundedPrice(RobustHedgeError):
    pass


class InfinitePenalty(RobustHedgeError):
    def __init__(self, node_id):
        super().__init__(f"support-function penalty is +inf at charged node {node_id!r}")
        self.node_id = node_id


class NotASupermartingale(RobustHedgeError):
    def __init__(self, node_id, value, envelope):
        super().__init__(
            f"V={value} at node {node_id!r} is below the one-step "
            f"super-hedging price {envelope} of its successors")
        self.node_id = node_id
        self.value = value
        self.envelope = envelope


class CapExceeded(RobustHedgeError):
    def __init__(self, count, cap):
        super().__init__(f"{count} stopping rules exceed the cap of {cap}")
        self.count = count
        self.cap = cap


class PreconditionViolated(RobustHedgeError):
    pass


class ArbitrageWithOptions(RobustHedgeError):
    pass
