"""Exception hierarchy shared by all darcysplit modules."""


class DarcySplitError(Exception):
    """Base class; ``stage`` is filled in by the splitting pipeline."""

    stage = None

    def __str__(self):
        msg = super().__str__()
        if self.stage:
            return f"[{self.stage}] {msg}"
        return msg


class MeshError(DarcySplitError):
    pass


class MeshFormatError(MeshError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ExprError(DarcySplitError):
    pass


class ParseError(ExprError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} (at byte offset {offset})")


class EvalError(ExprError):
    pass


class UnboundIdentifierError(EvalError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound identifier {name!r}")


class ConfigError(DarcySplitError):
    pass


class DataConditionError(DarcySplitError):
    def __init__(self, report):
        self.report = report
        super().__init__("data sign conditions violated: " + "; ".join(report.violations()))


class NonPositiveQ(DarcySplitError):
    def __init__(self, min_q, vertex, point=None):
        self.min_q = min_q
        self.vertex = vertex
        self.point = point
        where = f" at vertex {vertex}"
        if point is not None:
            where += f" ({point[0]:.6g}, {point[1]:.6g})"
        super().__init__(f"min q_h = {min_q:.6e}{where} is not positive; refine the mesh")


class SolverError(DarcySplitError):
    pass


class ConvergenceError(SolverError):
    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)
