"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import InvalidArgumentError
from .trajectory import CoefficientVector, EndpointConditions, TrajectorySamples


def check_coefficients(X, K=None):
    """Return a 2-D float array of coefficient vectors, one per row."""
    if isinstance(X, CoefficientVector):
        X = X.entries[None, :]
    elif len(X) and isinstance(X[0], CoefficientVector):
        X = np.vstack([c.entries for c in X])
    X = check_array(X, dtype=float, ensure_2d=True)
    if K is not None and X.shape[1] != K:
        raise InvalidArgumentError(f"expected {K} coefficients per row, got {X.shape[1]}")
    return X


def check_samples_list(X):
    """Accept one trajectory or a sequence, as samples or ``(times, values)``."""
    if isinstance(X, TrajectorySamples):
        return [X]
    out = []
    for item in X:
        if isinstance(item, TrajectorySamples):
            out.append(item)
        else:
            times, values = item
            out.append(TrajectorySamples(times, values))
    if not out:
        raise InvalidArgumentError("no trajectories given")
    return out


def check_endpoints(endpoints, D):
    if isinstance(endpoints, EndpointConditions):
        cond = endpoints
    elif isinstance(endpoints, dict):
        cond = EndpointConditions(endpoints["y0"], endpoints["yT"],
                                  endpoints.get("tolerance"))
    else:
        raise InvalidArgumentError("endpoints must be EndpointConditions or a dict")
    if cond.D != D:
        raise InvalidArgumentError(f"endpoints have {cond.D} dimensions, expected {D}")
    return cond
