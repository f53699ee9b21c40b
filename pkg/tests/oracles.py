"""Independent high-precision transcriptions of the bound formulas.

Everything here is written directly in mpmath at 50 digits and shares no
code with the package.  The Stein-factor integrals use the closed form
available for exponential rates with identical L1/L2 curves.
"""

import mpmath as mp

mp.mp.dps = 50


def dfact(n):
    out = mp.mpf(1)
    while n > 1:
        out *= n
        n -= 2
    return out


def alpha_t(alpha, lam_a, r, n):
    alpha = mp.mpf(alpha)
    if r == 1:
        return alpha
    return max(alpha - mp.mpf(n) * lam_a / 4, mp.mpf(0))


def beta_rn(alpha, beta, lam_a, r, n):
    at = alpha_t(alpha, lam_a, r, n)
    q = (n * mp.mpf(lam_a) + 6 * r * mp.mpf(beta)) / (2 * r * at)
    return mp.mpf(beta) + n * mp.mpf(lam_a) / 8 + at / 2 * q**n


def kappa(n, alpha, beta, lam_a, r):
    at = alpha_t(alpha, lam_a, r, n)
    alpha = mp.mpf(alpha)
    q = (n * mp.mpf(lam_a) + 6 * r * mp.mpf(beta)) / (2 * r * at)
    return 2 + 2 * mp.mpf(beta) / alpha + n * mp.mpf(lam_a) / (4 * alpha) + at / alpha * q**n


def threshold(alpha, lam_b, lam_s, n_e):
    v = mp.mpf(alpha) / (2 * dfact(n_e - 1) * (1 + mp.mpf(lam_b) / 2 + mp.mpf(lam_s) / 2) ** n_e)
    return min(mp.mpf(1), v)


def c123(z, lam_b, lam_s, n, n_e):
    z1, z2, z3, z4 = (mp.mpf(v) for v in z)
    lb, ls = mp.mpf(lam_b), mp.mpf(lam_s)
    c1 = 6 * z1
    c2 = (2 * z2 * lb**2 + z3 * lb * ls**2 + z4 * (1 + mp.mpf(3) ** (n - 1)) * ls**4) / 16
    c3 = (z3 * lb**3 + z4 * lb**4 * (1 + mp.mpf(3) ** (n - 1))
          + 4 * z4 * mp.mpf(1.5) ** n / mp.mpf(n) ** 4 * (lb**4 + n_e**2 * ls**4) * (lb**n + dfact(n) * ls**n)) / 48
    return c1, c2, c3


def omega(t, A, k, lam_a, beta, n, r, at, appendix=False):
    """Identical exponential rates ``A exp(-k t / 2)``; the relative rate is zero."""
    A, k = mp.mpf(A), mp.mpf(k)
    e = (1 - mp.mpf(1) / r) if appendix else (mp.mpf(1) / r - 1)
    rho = A * mp.exp(-k * mp.mpf(t) / 2)
    brace = 2 * mp.mpf(lam_a) * n + 3 * r * mp.mpf(beta)
    return 1 + 4 * rho**e * mp.sqrt(A) * (1 + 2 * (brace / mp.mpf(at)) ** n)


def omega_integral(shift, A, k, lam_a, beta, n, r, at, appendix=False):
    """``int_0^inf rho_1(t) omega(t + shift) dt`` in closed form."""
    A, k = mp.mpf(A), mp.mpf(k)
    e = (1 - mp.mpf(1) / r) if appendix else (mp.mpf(1) / r - 1)
    brace = 2 * mp.mpf(lam_a) * n + 3 * r * mp.mpf(beta)
    B = 1 + 2 * (brace / mp.mpf(at)) ** n
    return 2 * A / k + 4 * mp.sqrt(A) * B * A ** (1 + e) * mp.exp(-e * k * shift / 2) * 2 / (k * (1 + e))


def V(mu_b, mu_s, phi_s, i, n):
    return mp.mpf(mu_b[i]) + n * mp.mpf(mu_s[i]) ** 2 + mp.mpf(phi_s[i]) ** 2


def gam(c, i, n):
    v = lambda a, m: V(*c, a, m)
    if i == 2:
        return v(2, n - 2) / (n * v(1, 2 * n - 2))
    if i == 3:
        return (15 * v(2, n - 2) + 5 * v(3, n - 2)) / (4 * n * v(1, 4 * n - 2))
    if (i, n) == (4, 2):
        return (v(4, 0) + 6 * v(3, 0) + 5 * v(2, 0)) / (16 * v(1, 6))
    raise ValueError


def the(c, i, n):
    v = lambda a, m: V(*c, a, m)
    if i == 1:
        return n * v(1, n - 2)
    if i == 2:
        return 3 * n * v(1, 2 * n - 2) + n * v(2, n - 2)
    if i == 3:
        return 7 * n * v(1, 3 * n - 2) + 10 * n * v(2, n - 2) + 3 * n * v(3, n - 2)
    if (i, n) == (4, 2):
        return 31 * v(1, 5) + 27 * v(2, 2) + 12 * v(3, 1) + v(4, 0)
    raise ValueError


def zetas(A, k, alpha, beta, lam_a, n, r, mu_t, pi_f, mu_b, mu_s, phi_s, pi_s, pi_si, appendix=False):
    """Four Stein factors for identical exponential rates."""
    at = mp.mpf(alpha) if r == 1 else mp.mpf(alpha) - n * mp.mpf(lam_a)
    I = {i: omega_integral(i - 2, A, k, lam_a, beta, n, r, at, appendix) for i in (1, 2, 3, 4)}
    w0 = omega(0, A, k, lam_a, beta, n, r, at, appendix)
    w1 = omega(1, A, k, lam_a, beta, n, r, at, appendix)
    rho0 = mp.mpf(A)
    B6 = 1 + (beta_rn(alpha, beta, lam_a, r, 6 * n) / mp.mpf(alpha)) ** (mp.mpf(1) / 6)
    c = (mu_b, mu_s, phi_s)
    g = lambda i, m: gam(c, i, m)
    th = lambda i, m: the(c, i, m)
    mu_t = mp.mpf(mu_t)
    ps = lambda a, b: max(mp.mpf(pi_s[i]) for i in range(a, b + 1))
    psi = lambda a, b: max(mp.mpf(pi_si[i]) for i in range(a, b + 1))
    pf = lambda a, b: max(mp.mpf(pi_f[i]) for i in range(a, b + 1))
    third = mp.mpf(1) / 3

    z1 = mu_t * I[1]
    x2 = 4 * mu_t * B6 * rho0 * w1 * psi(0, 0) * (1 + mp.sqrt(g(2, 2)) + mp.mpf(mu_s[1])) * mp.exp(th(2, 2) / 2)
    z2 = 2 * x2 * rho0 * w0 + x2 * I[2]
    x3 = (4 * mu_t * ps(1, 1) * ps(1, 2) * psi(0, 0) * psi(0, 1) * rho0 * w1 * mp.exp(th(3, 4) / 2)
          * (7 + 7 * mp.sqrt(g(2, 2)) + g(2, 3) ** third + mp.sqrt(g(3, 2))) * B6**2)
    z3 = 4 * pf(1, 3) * (1 + 3 * g(2, 3) ** third + mp.sqrt(g(3, 2))) * B6 + x3 * I[3]
    br = (42 + 32 * mp.sqrt(g(2, 2)) + 6 * g(2, 2) + 2 * g(2, 3) ** third + 3 * g(2, 3) ** (2 * third)
          + 24 * g(2, 4) ** mp.mpf(0.25) + 3 * mp.sqrt(g(2, 4)) + 12 * g(2, 6) ** (mp.mpf(1) / 6)
          + 5 * mp.sqrt(g(3, 2)) + 5 * g(3, 3) ** third + mp.sqrt(g(4, 2))
          + 6 * mp.sqrt(g(2, 2)) * g(2, 6) ** (mp.mpf(1) / 6))
    x4 = (4 * mu_t * ps(1, 1) ** 2 * ps(1, 3) * psi(0, 0) ** 2 * psi(0, 2) * mp.exp(th(4, 2))
          * rho0 * w1 * B6**3 * br)
    short4 = (1 + 6 * g(2, 4) ** mp.mpf(0.25) + 4 * g(2, 3) + 3 * g(2, 3) ** (2 * third)
              + 4 * g(3, 3) ** third + mp.sqrt(g(4, 2)))
    z4 = 6 * pf(1, 4) * short4 * mp.exp(3 * th(4, 2) / 2) * B6 + x4 * I[4]
    return (z1, z2, z3, z4), I


def subopt_gibbs(gamma, theta, d, alpha, beta, mu2):
    gamma, theta = mp.mpf(gamma), mp.mpf(theta)
    inner = d / (2 * gamma) * (mp.log(2 * gamma / d) / theta + mp.log(mp.e * beta * mp.mpf(mu2) / (2 * alpha)))
    return inner ** (1 / theta)


def subopt_entropy(C, theta, d, alpha, beta):
    return d / (2 * mp.mpf(theta)) * mp.log(2 * mp.mpf(C) / d) + mp.mpf(d) / 2 * mp.log(mp.e * beta / mp.mpf(alpha))


def subopt_quadratic(gamma, k, d):
    return ((k * (1 + mp.mpf(d) / 2) - 1) / mp.mpf(gamma)) ** k


def quadratic_exact(gamma, k, d):
    return mp.gamma(mp.mpf(d) * k / 2 + k) / mp.gamma(mp.mpf(d) * k / 2) * mp.mpf(gamma) ** (-k)


def rel_err(a, b):
    a, b = mp.mpf(a), mp.mpf(b)
    return abs(a - b) / max(abs(b), mp.mpf(10) ** -300)
