#!/usr/bin/env python3
"""Offline construction of the default embedded rank-1 lattice generating vector.

Component-by-component search over odd candidates for N = 2^m_max, with product
weights gamma_j = 1/j^2 in the unanchored Sobolev space (shift-averaged kernel
B2(x) = x^2 - x + 1/6). Each component minimises the worst ratio, over
m in [m_min, m_max], of the squared error of the 2^m-point sub-rule to the best
squared error attainable for that 2^m in this component (embedded criterion).

Usage: python3 scripts/cbc_embedded_lattice.py [s] [m_min] [m_max] > lattice.txt
"""
import sys

import numba
import numpy as np


@numba.njit(cache=True)
def component_errors(prod, omega, gamma, m_min, m_max):
    big = 1 << m_max
    ncand = big // 2
    nm = m_max - m_min + 1
    err = np.empty((ncand, nm))
    for c in range(ncand):
        z = 2 * c + 1
        for mi in range(nm):
            m = m_min + mi
            n = 1 << m
            stride = 1 << (m_max - m)
            mask = n - 1
            acc = 0.0
            for k in range(n):
                idx = ((k * z) & mask) * stride
                acc += prod[k * stride] * (1.0 + gamma * omega[idx])
            err[c, mi] = acc / n - 1.0
    return err


def main():
    s = int(sys.argv[1]) if len(sys.argv) > 1 else 100
    m_min = int(sys.argv[2]) if len(sys.argv) > 2 else 4
    m_max = int(sys.argv[3]) if len(sys.argv) > 3 else 16
    big = 1 << m_max
    x = np.arange(big) / big
    omega = x * x - x + 1.0 / 6.0
    prod = np.ones(big)
    z = []
    for j in range(1, s + 1):
        gamma = 1.0 / (j * j)
        err = component_errors(prod, omega, gamma, m_min, m_max)
        ratio = (err / err.min(axis=0)).max(axis=1)
        c = int(np.argmin(ratio))
        zj = 2 * c + 1
        z.append(zj)
        k = np.arange(big, dtype=np.int64)
        prod *= 1.0 + gamma * omega[(k * zj) % big]
        print(f"component {j}: z={zj} worst-ratio={ratio[c]:.4f}", file=sys.stderr, flush=True)
    print(f"# embedded rank-1 lattice, base 2, N = 2^{m_min}..2^{m_max}, s = {s}")
    print("# CBC construction, product weights gamma_j = 1/j^2, unanchored Sobolev kernel")
    for zj in z:
        print(zj)


if __name__ == "__main__":
    main()
