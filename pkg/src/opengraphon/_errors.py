class DomainError(ValueError):
    """An argument lies outside the domain where the operation is defined."""


class ContractViolation(ValueError):
    """An input breaks a structural precondition (shape, symmetry, size match)."""


class HypothesisViolation(DomainError):
    """A closed-form result was requested outside the hypotheses it relies on."""
