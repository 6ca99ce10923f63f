"""Independent computer-algebra oracle for the frozen symbolic values used in tests.

Run with `python3 sympy_oracles.py`; every printed value is copied verbatim into
the Rust tests that assert it.
"""
import sympy as sp

x, y, u = sp.symbols("x y u")


def bracket(X, Y, coords):
    return [sp.simplify(sum(X[j] * sp.diff(Y[i], coords[j]) - Y[j] * sp.diff(X[i], coords[j])
                            for j in range(len(coords)))) for i in range(len(coords))]


print("d/dx(x^2*y - x/y) =", sp.simplify(sp.diff(x**2 * y - x / y, x)))

ric = [[sp.Integer(1)], [x], [x**2]]
for a in range(3):
    for b in range(a + 1, 3):
        print(f"[X{a},X{b}] riccati =", bracket(ric[a], ric[b], [x]))

print("[d/dx, y d/dx - x d/dy] =", bracket([1, 0], [y, -x], [x, y]))
print("[d/dx, x d/dx] =", bracket([1], [x], [x]))
print("[d/dx, x^2 d/dx] =", bracket([1], [x**2], [x]))

# curvature residual for PDE systems, parameters (x, y), unknown u
def curvature(Y1, Y2):
    return sp.expand(sp.diff(Y2, x) - sp.diff(Y1, y) + Y1 * sp.diff(Y2, u) - Y2 * sp.diff(Y1, u))

print("curvature u_x=u^2, u_y=u^2:", curvature(u**2, u**2))
print("curvature u_x=u, u_y=x*u:", curvature(u, x * u))
a, b, c, d, e, f = [sp.Function(n)(x, y) for n in "abcdef"]
R = curvature(a * u**2 + b * u + c, d * u**2 + e * u + f)
P = sp.Poly(R, u)
for k in range(3):
    print(f"riccati-family curvature u^{k} coeff:", sp.simplify(P.coeff_monomial(u**k)))

x0, x1, x2, x3 = sp.symbols("x_0 x_1 x_2 x_3")
cr = (x0 - x1) * (x2 - x3) / ((x0 - x2) * (x1 - x3))
for name, A in [("1", lambda s: 1), ("x", lambda s: s), ("x^2", lambda s: s**2)]:
    res = sum(A(v) * sp.diff(cr, v) for v in (x0, x1, x2, x3))
    print(f"cross-ratio tangency for {name}:", sp.simplify(res))

# reconstruction formula from the cross ratio (solve cr = k for x0)
k = sp.symbols("k")
print("cross-ratio solve:", sp.solve(sp.Eq(cr, k), x0))

# separable rule: Psi = phi(x0) - phi(x1) with phi = -1/x
print("separable tangency:", sp.simplify(1 / x0**2 * sp.diff(-1 / x0 + 1 / x1, x0) + 1 / x1**2 * sp.diff(-1 / x0 + 1 / x1, x1)))
print("separable solve:", sp.solve(sp.Eq(-1 / x0 + 1 / x1, k), x0))
