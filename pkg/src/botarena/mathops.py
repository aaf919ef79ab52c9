"""Elementwise transcendental functions evaluated with the C math library.

numpy dispatches some of its transcendental loops to SIMD kernels whose
results can differ in the last bit from the scalar path, depending on array
length and alignment. Anything that feeds a trajectory uses these ufuncs
instead, so one environment gives the same bits alone or inside a batch.
"""
import math

import numba as nb
import numpy as np


@nb.vectorize(["float64(float64)"], cache=True)
def cos(x):
    return math.cos(x)


@nb.vectorize(["float64(float64)"], cache=True)
def sin(x):
    return math.sin(x)


@nb.vectorize(["float64(float64)"], cache=True)
def exp(x):
    return math.exp(x)


@nb.vectorize(["float64(float64)"], cache=True)
def tanh(x):
    return math.tanh(x)


@nb.vectorize(["float64(float64, float64)"], cache=True)
def atan2(y, x):
    return math.atan2(y, x)


@nb.njit(cache=True)
def dense(x, w, b):
    """``x @ w.T + b`` with a fixed summation order per output.

    BLAS picks different kernels (and summation orders) for different batch
    shapes, which would make a policy's logits depend on the batch size.
    """
    rows, k = x.shape
    out_dim = w.shape[0]
    out = np.empty((rows, out_dim))
    for r in range(rows):
        for o in range(out_dim):
            acc = 0.0
            for j in range(k):
                acc += x[r, j] * w[o, j]
            out[r, o] = acc + b[o]
    return out
