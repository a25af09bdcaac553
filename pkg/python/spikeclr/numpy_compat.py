""" Helper functions that give the behavior of recent numpy versions
on older installations.

``sliding_window_view`` appeared in numpy 1.20; the fallback builds the
same read-only strided view with ``as_strided``.
"""

import numpy as np
from numpy.lib import NumpyVersion


def is_numpy_newer_than(version):
    return NumpyVersion(np.__version__) > version


def np_sliding_window_view(x, window_shape, axis):
    """ Read-only view of all windows of ``window_shape`` along ``axis``.

    The window dimensions are appended after the original dimensions,
    matching ``numpy.lib.stride_tricks.sliding_window_view``.
    """
    if is_numpy_newer_than('1.20.0'):
        return np.lib.stride_tricks.sliding_window_view(x, window_shape, axis=axis)

    x = np.asarray(x)
    out_shape = list(x.shape)
    for ax, w in zip(axis, window_shape):
        out_shape[ax] = x.shape[ax] - w + 1
    out_shape += list(window_shape)
    strides = list(x.strides) + [x.strides[ax] for ax in axis]
    return np.lib.stride_tricks.as_strided(
        x, shape=out_shape, strides=strides, writeable=False)
