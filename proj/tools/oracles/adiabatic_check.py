#!/usr/bin/env python3
"""Cross-checks for the adiabatic ramp: symmetry sectors, long-T limit, and an
independent ODE integration of the Schrodinger equation."""
import numpy as np
from scipy.integrate import solve_ivp
from ising_oracle import ising, site_op, SZ
from adiabatic_oracle import adiabatic_ratio


def translation_matrix(n):
    """T |b> = |rotate bits left by one|."""
    dim = 2**n
    t = np.zeros((dim, dim))
    for b in range(dim):
        shifted = ((b << 1) | (b >> (n - 1))) & (dim - 1)
        t[shifted, b] = 1.0
    return t


def main():
    n = 4
    h1, h2 = ising(n)
    h = h1 + h2
    w, v = np.linalg.eigh(h)
    gs = v[:, 0]
    t = translation_matrix(n)
    print("E levels:", w[:6])
    print("GS translation eigenvalue <GS|T|GS>:", gs.conj() @ t @ gs)
    print("1st excited translation eigenvalue:", v[:, 1].conj() @ t @ v[:, 1])

    # Lowest energy within the k=0 sector (translation eigenvalue +1).
    tw, tv = np.linalg.eigh((t + t.T) / 2)
    # project H onto the +1 eigenspace of the symmetrized translation
    mask = np.isclose(tw, 1.0)
    p = tv[:, mask]
    hk0 = p.T @ h @ p
    wk0 = np.linalg.eigvalsh(hk0)
    print("lowest k=0-sector energies:", wk0[:4])
    print("ratio bound from k=0 sector:", wk0[0] / w[0])

    for T in (100.0, 200.0, 400.0):
        r = adiabatic_ratio(n, T, dt=5e-3)
        print(f"T={T}: ratio {r:.9f}")

    # Independent check at T=10 with an ODE solver.
    htilde = -sum(site_op(SZ, i, n) for i in range(n))
    T = 10.0

    def rhs(t_, y):
        lam = np.sin(np.pi * t_ / (2 * T)) ** 2
        return -1j * ((lam * h + (1 - lam) * htilde) @ y)

    psi0 = np.zeros(2**n, dtype=complex)
    psi0[0] = 1.0
    sol = solve_ivp(rhs, (0.0, T), psi0, rtol=1e-10, atol=1e-12, method="DOP853")
    psi = sol.y[:, -1]
    e = np.real(psi.conj() @ h @ psi)
    print(f"T=10 ODE ratio: {e / w[0]:.9f}  (midpoint: {adiabatic_ratio(n, 10.0):.9f})")


if __name__ == "__main__":
    main()
