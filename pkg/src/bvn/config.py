"""Numeric tolerances and global caps.

Every decision procedure in this package is numerical, so the thresholds
below are part of every answer.  They are carried on the interpretation and
echoed in all reports rather than silently baked in.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict


@dataclass(frozen=True)
class Tolerances:
    """Thresholds used by the linear-algebra kernels.

    tau_num   general numeric tolerance (Hermiticity, trace checks,
              Choi-matrix comparison, unitarity, ...)
    tau_rank  relative cutoff for singular/eigenvalues when deciding the
              rank of a subspace or the support of a state
    tau_sub   residual-norm tolerance for subspace inclusion tests
    dim_cap   maximum total ambient dimension an interpretation may declare
    """

    tau_num: float = 1e-9
    tau_rank: float = 1e-9
    tau_sub: float = 1e-7
    dim_cap: int = 1024

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOL = Tolerances()
