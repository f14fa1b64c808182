class NormError(Exception):
    """Base class for everything the norm library raises on purpose."""


class Divergent(NormError):
    """The requested quasi-norm is infinite."""

    def __init__(self, message, side=None, label=''):
        super().__init__(message)
        self.side = side
        self.label = label


class ToleranceNotMet(NormError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class DivergentCombination(NormError):
    """A closed form was requested for an exponent/interval pair where it is infinite."""


class NotOnGrid(NormError):
    pass


class EvaluationRangeError(NormError):
    """A slowly varying weight produced a non-finite value."""


class ConfigError(NormError):
    def __init__(self, message, field=None):
        if field:
            message = '{}: {}'.format(field, message)
        super().__init__(message)
        self.field = field


class TrivialSpace(NormError):
    def __init__(self, report):
        super().__init__('Space is trivial: {} fails ({})'.format(report.condition, report.detail))
        self.report = report
