"""Solve an exported model with HiGHS through scipy, for tests only."""

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import lil_matrix

from sacrp.mip import Model


def solve_with_highs(model: Model, time_limit: float = 60.0) -> dict[str, float] | None:
    names = model.binaries + model.continuous
    index = {v: k for k, v in enumerate(names)}
    nv = len(names)
    cost = np.zeros(nv)
    for v in model.objective:
        cost[index[v]] = 1.0
    A = lil_matrix((len(model.constraints), nv))
    lo = np.full(len(model.constraints), -np.inf)
    hi = np.full(len(model.constraints), np.inf)
    for r, con in enumerate(model.constraints):
        for a, v in con.terms:
            A[r, index[v]] = a
        if con.sense in ("<=", "="):
            hi[r] = con.rhs
        if con.sense in (">=", "="):
            lo[r] = con.rhs
    integrality = np.array([1] * len(model.binaries) + [0] * len(model.continuous))
    upper = np.array([1.0] * len(model.binaries) + [np.inf] * len(model.continuous))
    res = milp(
        cost,
        constraints=LinearConstraint(A.tocsr(), lo, hi),
        integrality=integrality,
        bounds=Bounds(np.zeros(nv), upper),
        options={"time_limit": time_limit},
    )
    if res.x is None:
        return None
    return {v: float(res.x[k]) for k, v in enumerate(names)}
