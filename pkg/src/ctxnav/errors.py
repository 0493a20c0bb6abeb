"""Exception hierarchy. Every domain failure derives from :class:`CtxnavError`."""


class CtxnavError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class DegenerateInputError(CtxnavError, ValueError):
    pass


class SingularFitError(CtxnavError, ValueError):
    pass


class InvalidInputError(CtxnavError, ValueError):
    pass


class InvalidTrainingSetError(CtxnavError, ValueError):
    pass


class ScenarioError(CtxnavError, ValueError):
    """Scenario document failed to parse or validate.

    ``path`` names the offending field (``robot.goal``, ``persons[2].script``)
    and ``line`` the source line for syntax errors.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path:
            where.append(path)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


class InvalidPoseError(CtxnavError, ValueError):
    pass


class UnreachableGoalError(CtxnavError, RuntimeError):
    pass
