"""Name lookup for the built-in potentials and proximal operators."""

from __future__ import annotations

from ..errors import UsageError
from ..fsde import (Potential, potential_from_expression, quadratic_potential,
                    quadratic_quartic_potential, quartic_potential)
from ..prox import (ProxOperator, prox_huber, prox_l1, prox_quadratic, prox_quadratic_quartic,
                    prox_quartic, prox_zero)

POTENTIALS = {
    "quadratic": quadratic_potential,
    "quartic": quartic_potential,
    "quadratic_quartic": quadratic_quartic_potential,
}

PROXES = {
    "quadratic": prox_quadratic,
    "l1": prox_l1,
    "quartic": prox_quartic,
    "huber": prox_huber,
    "quadratic_quartic": prox_quadratic_quartic,
    "zero": prox_zero,
}


def make_potential(name: str, expr: str | None = None) -> Potential:
    """``"expr"`` (with *expr*) or ``"expr:<sympy>"`` parse a 1-D expression in ``x``."""
    if name == "expr" or name.startswith("expr:"):
        text = expr if name == "expr" else name[len("expr:"):]
        if not text:
            raise UsageError("expression potential needs an expression")
        return potential_from_expression(text)
    try:
        return POTENTIALS[name]()
    except KeyError:
        raise UsageError(f"unknown potential {name!r}") from None


def make_prox(name: str) -> ProxOperator:
    try:
        return PROXES[name]()
    except KeyError:
        raise UsageError(f"unknown functional {name!r}") from None
