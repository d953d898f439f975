"""Derive the nonlocal flux g(u) symbolically and compare with the printed one.

Applies (1 + mu beta d_xx) to the split form and matches it against the
evolution equation term by term. Prints the solved u^2 and u_x^2
coefficients, the leftover (should be 0), and the printed coefficients.

    python3 scripts/derive_flux.py
"""
import sympy as sp

x = sp.symbols("x")
e, mu, a, b, g, d, io, ka, c2, c5 = sp.symbols(
    "epsilon mu alpha beta gamma delta iota kappa c2 c5")
u = sp.Function("u")(x)
ux, uxx, uxxx = u.diff(x), u.diff(x, 2), u.diff(x, 3)

# (1 + mu beta d_xx) u_t = R(u)
R = -(ux + sp.Rational(3, 2) * e * u * ux + e**2 * io * u**2 * ux + e**3 * ka * u**3 * ux
      + mu * a * uxxx) + e * mu * (g * u * uxxx + d * ux * uxx)


def helmholtz(w):
    return w + mu * b * w.diff(x, 2)


flux = (1 - a / b) * u + c2 * u**2 + e**2 * io / 3 * u**3 + e**3 * ka / 4 * u**4 + c5 * ux**2
split = helmholtz(-(a / b) * ux + (e * g / b) * u * ux) - flux.diff(x)
res = sp.expand(split - R)
sol = sp.solve([res.coeff(ux).coeff(u, 1), res.coeff(uxx).coeff(ux, 1)], [c2, c5], dict=True)[0]

print("u^2   coefficient:", sp.simplify(sol[c2]))
print("u_x^2 coefficient:", sp.simplify(sol[c5]))
print("leftover after substitution:", sp.simplify(res.subs(sol)))

print()
print("coefficients at the default parameters:")
defaults = {e: 0.1, mu: 0.01, a: 1, b: -1, g: 1, d: 1}
from wavelab.model import FluxVariant, ModelParams, flux_coefficients  # noqa: E402

p = ModelParams()
for v in FluxVariant:
    c = flux_coefficients(p, v)
    print(f"  {v.value:>10}: c2 = {c[1]:+.6f}, c5 = {c[4]:+.6f}")
print(f"  {'symbolic':>10}: c2 = {float(sol[c2].subs(defaults)):+.6f}, "
      f"c5 = {float(sol[c5].subs(defaults)):+.6f}")
