"""High-precision oracle for the frozen constants used in the test suite.

Run directly::

    python tests/oracles/derived_values.py

Everything here is computed from first principles with mpmath at 50 digits,
independently of the package code, and printed with enough digits to freeze
into test files.  Constants frozen elsewhere cite this script.
"""

import mpmath as mp

mp.mp.dps = 50

# Reference market: mu=0.2, sigma=1, gamma=0.9, T=1, eps=0.05, lam=3
MU = mp.mpf("0.2")
SIGMA = mp.mpf("1")
GAMMA = mp.mpf("0.9")
T = mp.mpf("1")

Y_M = MU / (GAMMA * SIGMA**2)


def q_of(x):
    c = GAMMA * (1 - GAMMA) * SIGMA**2 / 2
    return -c * (x - Y_M) ** 2 + c * Y_M**2


def a1(c, mu=MU, sigma=SIGMA, gamma=GAMMA):
    y = mu / (gamma * sigma**2)
    k = 3 * mp.sqrt(2) / (gamma * sigma**3 * y * (1 - y))
    return sigma * y * (1 - y) / mp.sqrt(2 * c) * ((k * c ** mp.mpf("1.5") + 1) ** (mp.mpf(1) / 3) - 1)


def a2(c, mu=MU, sigma=SIGMA, gamma=GAMMA):
    y = mu / (gamma * sigma**2)
    k = 3 * mp.sqrt(2) / (gamma * sigma**3 * y * (1 - y))
    return (
        gamma * (1 - gamma) * sigma**4 * y**2 * (1 - y) ** 2 / (4 * c)
        * ((k * c ** mp.mpf("1.5") + 1) ** (mp.mpf(2) / 3) + 1)
    )


def main():
    print("merton fraction y_M              =", mp.nstr(Y_M, 20))
    print("Q(y_M)                           =", mp.nstr(q_of(Y_M), 20))
    print("Q(1)                             =", mp.nstr(q_of(mp.mpf(1)), 20))
    print("merton value exp(Q(y_M) T)       =", mp.nstr(mp.e ** (q_of(Y_M) * T), 20))
    print("a1(1)                            =", mp.nstr(a1(1), 20))
    print("a2(1)                            =", mp.nstr(a2(1), 20))

    # Bridge limits (transaction-cost-only and search-friction-only constants)
    to_width = mp.mpf("0.5") * (12 * Y_M**2 * (1 - Y_M) ** 2 / GAMMA) ** (mp.mpf(1) / 3)
    to_value = (1 - GAMMA) * GAMMA * SIGMA**2 / 8 * (12 * Y_M**2 * (1 - Y_M) ** 2 / GAMMA) ** (mp.mpf(2) / 3)
    so_value = (1 - GAMMA) * GAMMA * SIGMA**4 * Y_M**2 * (1 - Y_M) ** 2 / 2
    print("lim_{c->inf} a1(c)               =", mp.nstr(to_width, 20))
    print("lim_{c->inf} a2(c)               =", mp.nstr(to_value, 20))
    print("lim_{c->0} sqrt(c) a1(c)         = 0")
    print("lim_{c->0} c a2(c)               =", mp.nstr(so_value, 20))
    print("a1(1e9)                          =", mp.nstr(a1(mp.mpf("1e9")), 20))
    print("a2(1e9)                          =", mp.nstr(a2(mp.mpf("1e9")), 20))
    print("sqrt(c) a1 at c=1e-9             =", mp.nstr(mp.sqrt(mp.mpf("1e-9")) * a1(mp.mpf("1e-9")), 20))
    print("c a2 at c=1e-9                   =", mp.nstr(mp.mpf("1e-9") * a2(mp.mpf("1e-9")), 20))

    # Trade amounts m = w (y - x)/(1 + eps_buy y) (buy), w (y - x)/(1 - eps_sell y) (sell)
    eps = mp.mpf("0.05")
    m_buy = (mp.mpf("0.5") - 0) / (1 + eps * mp.mpf("0.5"))
    m_sell = (mp.mpf("0.5") - 1) / (1 - eps * mp.mpf("0.5"))
    print("buy amount  x=0   -> y=0.5, w=1  =", mp.nstr(m_buy, 20))
    print("sell amount x=1   -> y=0.5, w=1  =", mp.nstr(m_sell, 20))

    # Hold-only terminal moment: E[(A_T)^{1-gamma}] = exp((1-g)(mu - g sigma^2/2) T)
    hold = mp.e ** ((1 - GAMMA) * (MU - GAMMA * SIGMA**2 / 2) * T)
    print("all-stock hold moment E[A^{1-g}] =", mp.nstr(hold, 20))
    print("  -> utility w=1: /(1-gamma)     =", mp.nstr(hold / (1 - GAMMA), 20))

    # Search-friction-only target: y_M + sigma^2 y_M (1-y_M)(2 y_M - 1)/lam  (lam=3)
    so_target = Y_M + SIGMA**2 * Y_M * (1 - Y_M) * (2 * Y_M - 1) / 3
    print("SO target at lam=3               =", mp.nstr(so_target, 20))


if __name__ == "__main__":
    main()
