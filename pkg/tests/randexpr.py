"""Seeded random expression trees for the CAS soundness checks.

The shape is constrained so evaluation stays well-behaved on (0.5, 2)^n:
denominators, log and sqrt arguments are built positive by construction,
exponents are small non-negative integers, and transcendental functions
only receive shallow polynomial arguments (otherwise nested exp chains
push finite-difference comparisons past any fixed tolerance for reasons
that have nothing to do with the derivative rules under test).
"""

import random

from condsym import add, cos, div, exp, log, mul, neg, num, pow_, sin, sqrt, sub, var


def _leaf(rng, variables):
    if rng.random() < 0.7:
        return var(rng.choice(variables))
    return num(rng.choice((1, 2, 3, 0.5, 1.5, 0.25)))


def _tame(rng, variables):
    """Shallow polynomial argument for sin/cos/exp/log/sqrt."""
    a, b = _leaf(rng, variables), _leaf(rng, variables)
    return rng.choice((lambda: a,
                       lambda: add(a, b),
                       lambda: sub(a, b),
                       lambda: mul(a, b)))()


def _positive(rng, variables, depth):
    """Expression provably positive on the positive orthant."""
    if depth <= 0 or rng.random() < 0.4:
        if rng.random() < 0.6:
            return var(rng.choice(variables))
        return num(rng.choice((1, 2, 3, 0.5, 1.5)))
    pick = rng.random()
    if pick < 0.35:
        return add(_positive(rng, variables, depth - 1),
                   _positive(rng, variables, depth - 1))
    if pick < 0.65:
        return mul(_positive(rng, variables, depth - 1),
                   _positive(rng, variables, depth - 1))
    if pick < 0.85:
        return add(pow_(_tame(rng, variables), num(2)), num(rng.choice((1, 2))))
    return sqrt(_positive(rng, variables, depth - 1))


def random_expr(rng: random.Random, variables=("y", "z", "u"), depth=5):
    if depth <= 0:
        return _leaf(rng, variables)
    pick = rng.random()
    if pick < 0.16:
        return add(random_expr(rng, variables, depth - 1),
                   random_expr(rng, variables, depth - 1))
    if pick < 0.32:
        return sub(random_expr(rng, variables, depth - 1),
                   random_expr(rng, variables, depth - 1))
    if pick < 0.50:
        return mul(random_expr(rng, variables, depth - 1),
                   random_expr(rng, variables, depth - 1))
    if pick < 0.62:
        return div(random_expr(rng, variables, depth - 1),
                   _positive(rng, variables, depth - 1))
    if pick < 0.72:
        return pow_(random_expr(rng, variables, depth - 2 if depth > 1 else 0),
                    num(rng.randint(0, 3)))
    if pick < 0.78:
        return neg(random_expr(rng, variables, depth - 1))
    if pick < 0.85:
        return sin(_tame(rng, variables))
    if pick < 0.92:
        return cos(_tame(rng, variables))
    if pick < 0.96:
        return exp(_tame(rng, variables))
    if pick < 0.98:
        return log(_positive(rng, variables, depth - 1))
    return sqrt(_positive(rng, variables, depth - 1))


def random_point(rng: random.Random, variables, lo=0.5, hi=2.0):
    return {v: rng.uniform(lo, hi) for v in variables}
