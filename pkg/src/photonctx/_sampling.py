import numpy as np


def categorical(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draws from probabilities ``p`` using uniforms ``u`` in [0, 1).

    Outcomes with zero probability are never returned, including trailing ones
    that rounding in the cumulative sum would otherwise leave reachable.
    """
    p = np.asarray(p, dtype=float)
    cdf = np.cumsum(p)
    last = int(np.flatnonzero(p > 0)[-1])
    cdf = cdf / cdf[last]
    cdf[last:] = 1.0
    return np.searchsorted(cdf, u, side="right")
