"""Exception types shared across the control stack."""


class ContractError(ValueError):
    """An operation was called with arguments that violate its contract."""


class SingularityError(ContractError):
    """A geometric quantity is undefined at the query point."""


class ScenarioError(ValueError):
    """A scenario document is malformed or inconsistent."""


class CbfInfeasibleError(RuntimeError):
    """The safety rows alone admit no control input; the run cannot continue."""
