"""Pluggable linear-programming backend.

The contract is deliberately small: minimize a linear cost over box-bounded
variables with ``A x <= b`` rows, solved to 1e-7 feasibility/optimality.
Backends must be reentrant across independent instances. The default
adapter drives HiGHS through scipy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog


class LpBackendError(RuntimeError):
    """The backend failed for a reason other than infeasibility."""


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None


@runtime_checkable
class LpBackend(Protocol):
    def solve_min(
        self,
        cost: np.ndarray,
        a_ub: "sp.csr_matrix | None",
        b_ub: np.ndarray | None,
        lower: np.ndarray,
        upper: np.ndarray,
    ) -> LpResult:
        ...


class HighsBackend:
    """LP solves via scipy's HiGHS wrapper."""

    def solve_min(self, cost, a_ub, b_ub, lower, upper) -> LpResult:
        res = linprog(
            cost,
            A_ub=a_ub,
            b_ub=b_ub,
            bounds=np.column_stack([lower, upper]),
            method="highs",
        )
        if res.status == 0:
            return LpResult("optimal", np.asarray(res.x, dtype=float))
        if res.status == 2:
            return LpResult("infeasible", None)
        raise LpBackendError(f"LP solve failed (status {res.status}): {res.message}")


DEFAULT_BACKEND = HighsBackend()
