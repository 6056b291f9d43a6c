"""Exception hierarchy.

Every error carries a ``details`` dict so the CLI can serialise it.  The
CLI maps :class:`BudgetError` to exit code 3 and everything else here to 2.
"""
from __future__ import annotations


class DefstackError(Exception):
    def __init__(self, message: str = "", **details):
        super().__init__(message or self.__class__.__name__)
        self.details = details

    def to_json(self) -> dict:
        out = {"error": self.__class__.__name__, "message": str(self)}
        out.update({k: _jsonable(v) for k, v in self.details.items()})
        return out


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (int, str, bool)) or v is None:
        return v
    return str(v)


# algebra construction -----------------------------------------------------
class InvalidAlgebra(DefstackError):
    axiom = "invalid"

    def __init__(self, message: str = "", witness=()):
        super().__init__(message, axiom=self.axiom, witness=tuple(witness))
        self.witness = tuple(witness)


class NoUnit(InvalidAlgebra):
    axiom = "unit"


class NotCommutative(InvalidAlgebra):
    axiom = "commutativity"


class NotAssociative(InvalidAlgebra):
    axiom = "associativity"


class MaximalIdealNotNilpotent(InvalidAlgebra):
    axiom = "nilpotency"


class InfiniteDimensional(DefstackError):
    pass


class NotAHomomorphism(DefstackError):
    pass


# maps and squares ---------------------------------------------------------
class NotSurjective(DefstackError):
    pass


class NeitherMapSurjective(DefstackError):
    pass


class FirstMapNotSurjective(DefstackError):
    pass


class LegNotSurjective(DefstackError):
    pass


# deformation problems -----------------------------------------------------
class BudgetError(DefstackError):
    pass


class EnumerationBudgetExceeded(BudgetError):
    pass


class NotADeformationFunctor(DefstackError):
    pass


class GluingUnavailable(DefstackError):
    pass


class TruncationTooShallow(DefstackError):
    pass


class FunctorialityViolation(DefstackError):
    pass


class InvalidModule(DefstackError):
    pass


class InvalidQuotient(DefstackError):
    pass


class RestrictionMismatch(DefstackError):
    pass


# spaces and covers --------------------------------------------------------
class InvalidSpace(DefstackError):
    pass


class InvalidCover(DefstackError):
    pass


class NotARefinement(DefstackError):
    pass
