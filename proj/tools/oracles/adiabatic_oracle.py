#!/usr/bin/env python3
"""Adiabatic-ramp reference for the N=4 chain at several total durations.

H(l) = l * H + (1 - l) * Htilde,  Htilde = -sum_i S^z_i,  l(t) = sin^2(pi t / 2T),
piecewise-constant midpoint steps of dt = 1e-3, starting from |up...up>.
"""
import numpy as np
from ising_oracle import ising, site_op, SZ


def adiabatic_ratio(n, T, dt=1e-3):
    h1, h2 = ising(n)
    h = h1 + h2
    htilde = -sum(site_op(SZ, i, n) for i in range(n))
    e_gs = np.linalg.eigvalsh(h)[0]
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    t = 0.0
    steps = int(np.ceil(T / dt))
    for _ in range(steps):
        step = min(dt, T - t)
        lam = np.sin(np.pi * (t + 0.5 * step) / (2 * T)) ** 2
        w, v = np.linalg.eigh(lam * h + (1 - lam) * htilde)
        psi = v @ (np.exp(-1j * step * w) * (v.conj().T @ psi))
        t += step
    e = np.real(psi.conj() @ h @ psi)
    return e / e_gs


def main():
    n = 4
    for T in (2.0, 5.0, 10.0, 20.0, 50.0):
        r = adiabatic_ratio(n, T)
        print(f"N={n} T={T:5.1f}  E/E_GS = {r:.12f}")


if __name__ == "__main__":
    main()
