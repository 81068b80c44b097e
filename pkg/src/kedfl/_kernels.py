"""Compiled inner loops for the non-paraxial Huygens cascade.

Each output element is accumulated by a single sequential loop, so results
are bit-identical however the output range is split across threads.
"""

import math

import numba as nb
import numpy as np


@nb.njit(nogil=True, cache=True)
def point_kernel(ys, zs, sep, k):
    """exp(-jk(r - sep)) / r from a point on the axis to a tensor grid."""
    out = np.empty((ys.size, zs.size), dtype=np.complex128)
    sep2 = sep * sep
    for i in range(ys.size):
        y2 = ys[i] * ys[i]
        for j in range(zs.size):
            rho2 = y2 + zs[j] * zs[j]
            r = math.sqrt(sep2 + rho2)
            ph = k * rho2 / (r + sep)
            out[i, j] = complex(math.cos(ph), -math.sin(ph)) / r
    return out


@nb.njit(nogil=True, cache=True)
def propagate(amp, ys, zs, yd, zd, sep, k, q0, q1, out):
    """out[q] = sum_p amp[p] exp(-jk(r_pq - sep)) / r_pq for flat q in [q0, q1)."""
    nys, nzs = amp.shape
    nzd = zd.size
    sep2 = sep * sep
    for q in range(q0, q1):
        yq = yd[q // nzd]
        zq = zd[q % nzd]
        acc_re = 0.0
        acc_im = 0.0
        for i in range(nys):
            dy = ys[i] - yq
            base = dy * dy
            for j in range(nzs):
                dz = zs[j] - zq
                rho2 = base + dz * dz
                r = math.sqrt(sep2 + rho2)
                ph = k * rho2 / (r + sep)
                c = math.cos(ph) / r
                s = math.sin(ph) / r
                a = amp[i, j]
                acc_re += a.real * c + a.imag * s
                acc_im += a.imag * c - a.real * s
        out[q] = complex(acc_re, acc_im)
