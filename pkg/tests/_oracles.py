"""Slow, obviously-correct reference implementations used only by the tests."""
import numpy as np


def cox_de_boor(knots, degree, k, x):
    """B_{k,degree}(x) by the textbook recursion, right-closed at the last knot."""
    t = knots
    if degree == 0:
        if t[k] <= x < t[k + 1]:
            return 1.0
        # the last nonempty span also owns the right endpoint
        if x == t[-1] and t[k] < t[k + 1] == t[-1]:
            return 1.0
        return 0.0
    out = 0.0
    d1 = t[k + degree] - t[k]
    if d1 > 0:
        out += (x - t[k]) / d1 * cox_de_boor(t, degree - 1, k, x)
    d2 = t[k + degree + 1] - t[k + 1]
    if d2 > 0:
        out += (t[k + degree + 1] - x) / d2 * cox_de_boor(t, degree - 1, k + 1, x)
    return out


def basis_matrix(knots, degree, points):
    n = len(knots) - degree - 1
    return np.array([[cox_de_boor(knots, degree, k, x) for k in range(n)] for x in points])


def design_loop(x, basis):
    """X[i, k] = sum_j x[p + i - j] B[j, k] as an explicit double loop."""
    p = basis.shape[0] - 1
    n = len(x)
    out = np.zeros((n - p, basis.shape[1]))
    for i in range(n - p):
        for k in range(basis.shape[1]):
            s = 0.0
            for j in range(p + 1):
                s += x[p + i - j] * basis[j, k]
            out[i, k] = s
    return out


def q_form_loop(b, lambdas, rho):
    s = 0.0
    for k in range(len(lambdas)):
        s += lambdas[k] * (b[k + 1] - b[k]) ** 2
    return s + rho * b[-1] ** 2


def gaussian_conditional(Q, b, k):
    """Mean and variance of coordinate k given the rest under N(0, Q^{-1}), via the covariance."""
    S = np.linalg.inv(Q)
    rest = [i for i in range(len(b)) if i != k]
    Srr = S[np.ix_(rest, rest)]
    Skr = S[k, rest]
    w = np.linalg.solve(Srr, Skr)
    return float(w @ b[rest]), float(S[k, k] - Skr @ w)


def hat_trace(X, S):
    """tr[X (X'X + S)^{-1} X'] in the n x n form."""
    H = X @ np.linalg.solve(X.T @ X + S, X.T)
    return float(np.trace(H))


def total_variation(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.abs(p / p.sum() - q / q.sum()).sum())


def icar_prior_draw(rng, lambdas, rho, sigma2=1.0):
    """b ~ N(0, sigma2 Q^{-1}) through independent increments, no factorisation.

    b_K ~ N(0, sigma2 / rho) and b_{k+1} - b_k ~ N(0, sigma2 / lambda_k).
    """
    lam = np.asarray(lambdas, dtype=float)
    inc = np.sqrt(sigma2 / lam) * rng.standard_normal(lam.size)
    b = np.empty(lam.size + 1)
    b[-1] = np.sqrt(sigma2 / rho) * rng.standard_normal()
    b[:-1] = b[-1] - np.cumsum(inc[::-1])[::-1]
    return b
