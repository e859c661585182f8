"""Independent reference values for the unit tests (mpmath, 50 digits).

Run: python3 tests/oracles/derive_values.py
The printed numbers are frozen into the C++ tests.
"""
import mpmath as mp

mp.mp.dps = 50


def params(alpha):
    alpha = mp.mpf(alpha)
    nu = abs(1 - alpha) / (2 - alpha)
    kappa = (2 - alpha) / 2
    return alpha, nu, kappa


def phi(alpha, k):
    a, nu, kappa = params(alpha)
    j = mp.besseljzero(nu, k)
    c = mp.sqrt(2 - a) / abs(mp.besselj(nu, j, derivative=1))
    return j, c, (lambda x: c * x ** ((1 - a) / 2) * mp.besselj(nu, j * x ** kappa))


print("# Bessel zeros")
for nu, k in [(mp.mpf(1) / 3, 1), (mp.mpf(1) / 3, 2), (mp.mpf(1) / 3, 10), (0, 1), (0, 5), (1, 1),
              (1, 7), (9, 1), (mp.mpf(3) / 7, 3)]:
    print(f"j({mp.nstr(nu, 6)}, {k}) = {mp.nstr(mp.besseljzero(nu, k), 20)}")

print("# Bessel J values")
for nu, x in [(mp.mpf(1) / 3, mp.mpf("0.5")), (mp.mpf(1) / 3, 20), (0, 15), (9, 30), (1, mp.mpf("12.5")),
              (mp.mpf("2.5"), mp.mpf("11.9"))]:
    print(f"J({mp.nstr(nu, 6)}, {mp.nstr(x, 6)}) = {mp.nstr(mp.besselj(nu, x), 20)}")
    print(f"J'({mp.nstr(nu, 6)}, {mp.nstr(x, 6)}) = {mp.nstr(mp.besselj(nu, x, derivative=1), 20)}")

print("# eigenvalues kappa^2 j^2")
for alpha in ["0.5", "1", "1.5"]:
    a, nu, kappa = params(alpha)
    print(alpha, [mp.nstr(kappa**2 * mp.besseljzero(nu, k) ** 2, 20) for k in (1, 2, 3)])

print("# observation traces")
for alpha in ["0.5", "1", "1.5"]:
    a, nu, kappa = params(alpha)
    for k in (1, 3):
        j, c, f = phi(alpha, k)
        x = mp.mpf("1e-40")
        if a < 1:
            val = x**a * mp.diff(f, x)
        else:
            val = f(x)
        print(alpha, k, mp.nstr(val, 20))

print("# int_0^T t^p e^{-s t} dt")
for p, s, T in [(3, mp.mpc(2, 1), mp.mpf("1.5")), (0, mp.mpf("1e-3"), 1), (10, 50, 1), (2, mp.mpc(0.5, -3), 2),
                (5, 200, mp.mpf("0.75"))]:
    v = mp.quad(lambda t: t**p * mp.exp(-s * t), [0, T])
    print(p, s, T, mp.nstr(v, 20))

print("# product integrals over (0.3, 0.7)")
for alpha in ["0", "0.5", "1.5"]:
    _, _, f1 = phi(alpha, 1)
    _, _, f2 = phi(alpha, 2)
    print(alpha, mp.nstr(mp.quad(lambda x: f1(x) ** 2, [0.3, 0.7]), 20),
          mp.nstr(mp.quad(lambda x: f1(x) * f2(x), [0.3, 0.7]), 20))

print("# smallest eigenvalue of the restriction Gram, omega = (0.3, 0.7)")
for alpha in ["0.5", "1.5"]:
    for J in (3, 6):
        fs = [phi(alpha, k)[2] for k in range(1, J + 1)]
        G = mp.matrix(J, J)
        for i in range(J):
            for l in range(i + 1):
                G[i, l] = G[l, i] = mp.quad(lambda x: fs[i](x) * fs[l](x), [0.3, 0.5, 0.7])
        print(alpha, J, mp.nstr(min(mp.eigsy(G)[0]), 20))
