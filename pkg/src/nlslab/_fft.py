"""Thin wrappers around scipy.fft with a process-wide worker count.

The worker count is fixed at import (override with NLSLAB_FFT_WORKERS) so that
repeated runs on the same machine produce bit-identical transforms.
"""

import os

import scipy.fft as _sfft

_WORKERS = int(os.environ.get("NLSLAB_FFT_WORKERS", min(2, os.cpu_count() or 1)))


def fftn(a):
    return _sfft.fftn(a, workers=_WORKERS)


def ifftn(a):
    return _sfft.ifftn(a, workers=_WORKERS)
