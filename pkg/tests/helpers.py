"""Random problem instances shared by the engine tests."""
import numpy as np

from src.core.nctf import rowwise_convolve


def planted_model(rng, k=16, t=32, r=4, lh=3):
    """Exact N-CTF+NMF model: returns (y, h, w, x) with y = h * (w x)"""
    h = rng.uniform(0.2, 1.0, size=(k, lh))
    w = rng.uniform(0.1, 1.0, size=(k, r))
    x = rng.uniform(0.1, 1.0, size=(r, t))
    y = rowwise_convolve(w @ x, h)
    return y, h, w, x


def random_instance(rng, k=16, t=32, r=4, lh=3):
    """Independent positive y, h, w, x of consistent shapes"""
    return (
        rng.uniform(0.1, 2.0, size=(k, t)),
        rng.uniform(0.1, 1.0, size=(k, lh)),
        rng.uniform(0.1, 1.0, size=(k, r)),
        rng.uniform(0.1, 1.0, size=(r, t)),
    )
