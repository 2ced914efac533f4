# fracshape/shape/functionals.py
"""
Spectral functionals J(mask) = F(lambda_1, ..., lambda_k) over a small monotone grammar:

    expr := lambda<j> | number | expr + expr | max(expr, ...) | c * expr  (c > 0 constant)

Every expression the grammar accepts is nondecreasing in each lambda_j.
"""

import ast
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from fracshape.core.errors import ParameterError
from fracshape.grid.lattice import DomainMask
from fracshape.grid.stiffness import StiffnessOperator, restrict
from fracshape.solvers.spectrum import eigenvalues

_EIGEN_NAME = re.compile(r"^lambda(\d+)$")


def _is_constant(node: ast.AST) -> bool:
    return not any(isinstance(n, ast.Name) for n in ast.walk(node))


def _check(node: ast.AST) -> int:
    """Validate a node and return the largest eigenvalue index it consumes."""
    if isinstance(node, ast.Expression):
        return _check(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return 0
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub) and isinstance(node.operand, ast.Constant):
        return _check(node.operand)
    if isinstance(node, ast.Name):
        match = _EIGEN_NAME.match(node.id)
        if not match or int(match.group(1)) < 1:
            raise ParameterError("functional", f"unknown name {node.id!r}, expected lambda1, lambda2, ...")
        return int(match.group(1))
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Add):
        return max(_check(node.left), _check(node.right))
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Mult):
        k = max(_check(node.left), _check(node.right))
        constants = [side for side in (node.left, node.right) if _is_constant(side)]
        if not constants or _evaluate(constants[0], np.zeros(0)) <= 0:
            raise ParameterError("functional", "products need a positive constant factor")
        return k
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id == "max"
        and node.args
        and not node.keywords
    ):
        return max(_check(arg) for arg in node.args)
    raise ParameterError("functional", f"unsupported construct {ast.dump(node)[:60]}")


def _evaluate(node: ast.AST, lam: np.ndarray) -> float:
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, lam)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.UnaryOp):
        return -_evaluate(node.operand, lam)
    if isinstance(node, ast.Name):
        return float(lam[int(_EIGEN_NAME.match(node.id).group(1)) - 1])
    if isinstance(node, ast.BinOp):
        left, right = _evaluate(node.left, lam), _evaluate(node.right, lam)
        return left + right if isinstance(node.op, ast.Add) else left * right
    return max(_evaluate(arg, lam) for arg in node.args)


@dataclass(frozen=True)
class FunctionalSpec:
    expression: str
    name: str = ""
    k: int = 0

    def __post_init__(self):
        try:
            tree = ast.parse(self.expression, mode="eval")
        except SyntaxError as exc:
            raise ParameterError("functional", f"cannot parse {self.expression!r}: {exc.msg}") from exc
        used = _check(tree)
        if used == 0:
            raise ParameterError("functional", "expression uses no eigenvalue")
        object.__setattr__(self, "k", max(self.k, used))
        object.__setattr__(self, "name", self.name or self.expression)
        object.__setattr__(self, "_tree", tree)

    @cached_property
    def floor(self) -> float:
        """Combiner at (0, ..., 0), a lower bound when every constant is nonnegative."""
        return self.combine(np.zeros(self.k))

    def combine(self, lam) -> float:
        lam = np.asarray(lam, dtype=float)
        if lam.size < self.k:
            raise ParameterError("functional", f"needs {self.k} eigenvalues, got {lam.size}")
        if np.any(np.isinf(lam[: self.k])):
            return np.inf
        return _evaluate(self._tree, lam)


def eval_functional(spec: FunctionalSpec, base: StiffnessOperator, mask: DomainMask) -> float:
    """J(mask); the empty mask scores +inf."""
    if mask.is_empty:
        return np.inf
    return spec.combine(eigenvalues(restrict(base, mask), spec.k))
