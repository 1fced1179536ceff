#!/usr/bin/env python3
"""Reference values for the Ising chain tests, via explicit Kronecker products.

Site 0 is the least significant bit; bit 0 means spin up.  Run from anywhere:

    python3 tools/oracles/ising_oracle.py
"""
import numpy as np

SX = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
SY = 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = 0.5 * np.array([[1, 0], [0, -1]], dtype=complex)
ID = np.eye(2, dtype=complex)


def site_op(op, site, n):
    """Operator acting on one site, site 0 = LSB."""
    m = np.eye(1, dtype=complex)
    for k in range(n):
        m = np.kron(op if k == site else ID, m)
    return m


def ising(n, J=1.0, hz=0.4523, hx=0.4045):
    h1 = np.zeros((2**n, 2**n), dtype=complex)
    h2 = np.zeros_like(h1)
    for i in range(n):
        j = (i + 1) % n
        h1 += J * site_op(SZ, j, n) @ site_op(SZ, i, n)
        h1 += hz * site_op(SZ, i, n)
        h2 += hx * site_op(SX, i, n)
    return h1, h2


def gauge(n):
    y = sum(site_op(SY, i, n) for i in range(n))
    xy = np.zeros((2**n, 2**n), dtype=complex)
    yz = np.zeros_like(xy)
    for i in range(n):
        j = (i + 1) % n
        xy += site_op(SX, i, n) @ site_op(SY, j, n)
        xy += site_op(SY, i, n) @ site_op(SX, j, n)
        yz += site_op(SY, i, n) @ site_op(SZ, j, n)
        yz += site_op(SZ, i, n) @ site_op(SY, j, n)
    return y, xy, yz


def main():
    np.set_printoptions(precision=15)

    # Two-site chain without fields: H diagonal, doubled coupling J S^z S^z.
    h1, h2 = ising(2, J=1.0, hz=0.0, hx=0.0)
    h = h1 + h2
    print("N=2 J=1 hz=hx=0 diagonal:", np.real(np.diag(h)))
    print("N=2 J=1 hz=hx=0 E_GS:", np.linalg.eigvalsh(h)[0])

    # Paper parameters.
    for n in (2, 3, 4, 6, 8):
        h1, h2 = ising(n)
        evals = np.linalg.eigvalsh(h1 + h2)
        print(f"N={n} paper params E_GS: {evals[0]:.15f}  E_GS/N: {evals[0]/n:.15f}")

    # |up...up> energy for h_x = 0 chains: J/4 + hz/2 per site times N.
    for n in (2, 4):
        h1, h2 = ising(n, hx=0.0)
        e0 = np.real((h1 + h2)[0, 0])
        print(f"N={n} hx=0 all-up energy: {e0:.15f}  per-site: {e0/n:.15f}")

    y, xy, yz = gauge(2)
    print("N=2 Y eigenvalues:", np.linalg.eigvalsh(y))
    print("N=2 X|Y eigenvalues:", np.linalg.eigvalsh(xy))
    print("N=2 Y|Z eigenvalues:", np.linalg.eigvalsh(yz))
    for n in (2, 3, 4):
        y, xy, yz = gauge(n)
        for name, m in (("Y", y), ("X|Y", xy), ("Y|Z", yz)):
            herm = np.max(np.abs(m - m.conj().T))
            print(f"N={n} {name}: herm_dev={herm:.2e} trace={np.trace(m):.2e}")

    # A fixed short protocol for a cross-language regression value:
    # N=3 paper params, sequence H1, H2, Y, X|Y with durations 0.3 0.7 0.5 0.2.
    n = 3
    h1, h2 = ising(n)
    y, xy, yz = gauge(n)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    from scipy.linalg import expm
    for m, t in ((h1, 0.3), (h2, 0.7), (y, 0.5), (xy, 0.2)):
        psi = expm(-1j * t * m) @ psi
    h = h1 + h2
    e = np.real(psi.conj() @ h @ psi)
    e2 = np.real(psi.conj() @ (h @ (h @ psi)))
    print(f"N=3 protocol energy density: {e/n:.15f}")
    print(f"N=3 protocol variance density: {np.sqrt(e2 - e*e)/n:.15f}")
    print(f"N=3 protocol norm error: {abs(np.linalg.norm(psi) - 1.0):.2e}")


if __name__ == "__main__":
    main()
