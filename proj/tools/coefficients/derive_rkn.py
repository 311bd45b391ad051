#!/usr/bin/env python3
"""Derive time-symmetric ABA splitting coefficients of RKN type.

The splitting
    A(a_{s+1} h) B(b_s h) A(a_s h) ... B(b_1 h) A(a_1 h)
applied to q' = v, v' = g(q) (A = drift, B = kick) is an explicit RKN method
with nodes c_i = a_1 + ... + a_i, weights b_i, position weights (1 - c_i) b_i
and ā_ij = (c_i - c_j) b_j for j < i.  Its order conditions are indexed by
special Nystrom trees: a fat root whose children are meagre leaves or meagre
vertices carrying one fat subtree.

Every solution found by Levenberg-Marquardt from random starts is then moved,
inside the solution set, toward the smallest sum of squared residuals of the
order-(p+1) conditions; the best one is polished in 40-digit arithmetic.

With --solver staged each start, drawn from [center - spread/2, center + spread],
is first driven onto the order --stage-order conditions and then onto the full
set by minimum-norm Gauss-Newton; the first start that converges with all
coefficients below 2 in magnitude is polished.

Usage: derive_rkn.py ORDER STAGES NAME OUTFILE [--seed N] [--starts N] [--center X] [--spread X]
                     [--solver lm|staged] [--stage-order N]
       derive_rkn.py ORDER STAGES NAME OUTFILE --polish FILE

With --polish the search is skipped: the a/b values in FILE (one per line,
a-list then b-list, "#" lines ignored) are refined onto the order conditions.
"""

import argparse
import sys
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import qr
from scipy.optimize import least_squares, minimize

LEAF = "m"


def order(tree):
    total = 1
    for child in tree:
        total += 1 if child == LEAF else 1 + order(child)
    return total


@lru_cache(maxsize=None)
def trees_of_order(n):
    """Fat-rooted special Nystrom trees with n vertices, canonical form."""
    if n == 1:
        return ((),)
    # A child is LEAF (1 vertex) or a fat subtree t (1 + order(t) vertices).
    kinds = [(LEAF, 1)]
    for k in range(1, n - 1):
        for t in trees_of_order(k):
            kinds.append((t, k + 1))
    kinds.sort(key=lambda kv: repr(kv[0]))
    result = set()

    def build(start, remaining, acc):
        if remaining == 0:
            result.add(tuple(sorted(acc, key=repr)))
            return
        for idx in range(start, len(kinds)):
            child, size = kinds[idx]
            if size <= remaining:
                build(idx, remaining - size, acc + [child])

    build(0, n - 1, [])
    return tuple(sorted(result, key=repr))


def gamma(tree):
    g = order(tree)
    for child in tree:
        if child != LEAF:
            g *= (1 + order(child)) * gamma(child)
    return g


class Rkn:
    """Order-condition residuals; xp is "np" (float arrays) or "mp" (mpmath)."""

    def __init__(self, a, b, xp):
        self.xp = xp
        s = len(b)
        if xp == "np":
            self.c = np.cumsum(np.asarray(a[:s], dtype=float))
            self.b = np.asarray(b, dtype=float)
            self.bbar = (1 - self.c) * self.b
            diff = self.c[:, None] - self.c[None, :]
            self.abar = np.tril(diff * self.b[None, :], -1)
            self.one = 1.0
        else:
            c = []
            acc = mpmath.mpf(0)
            for i in range(s):
                acc = acc + a[i]
                c.append(acc)
            self.c = mpmath.matrix(c)
            self.b = mpmath.matrix(list(b))
            self.bbar = mpmath.matrix([(1 - c[i]) * b[i] for i in range(s)])
            self.abar = mpmath.matrix(s, s)
            for i in range(s):
                for j in range(i):
                    self.abar[i, j] = (c[i] - c[j]) * b[j]
            self.one = mpmath.mpf(1)
        self.s = s
        self.cache = {}

    def _prod(self, u, v):
        if self.xp == "np":
            return u * v
        return mpmath.matrix([u[i] * v[i] for i in range(self.s)])

    def phi(self, tree):
        if tree in self.cache:
            return self.cache[tree]
        if self.xp == "np":
            out = np.ones(self.s)
        else:
            out = mpmath.matrix([mpmath.mpf(1)] * self.s)
        for child in tree:
            if child == LEAF:
                out = self._prod(out, self.c)
            else:
                out = self._prod(out, self.abar * self.phi(child)
                                 if self.xp == "mp" else self.abar @ self.phi(child))
        self.cache[tree] = out
        return out

    def _dot(self, u, v):
        if self.xp == "np":
            return float(u @ v)
        return sum(u[i] * v[i] for i in range(self.s))

    def residuals(self, max_order):
        res = []
        for n in range(1, max_order + 1):
            for t in trees_of_order(n):
                p = self.phi(t)
                res.append(self._dot(self.b, p) - self.one / gamma(t))
                if n <= max_order - 1:
                    res.append(self._dot(self.bbar, p)
                               - self.one / ((n + 1) * gamma(t)))
        return res


def expand(params, stages):
    """Half-lists of a (length stages+1) and b (length stages), palindromic."""
    na = (stages + 2) // 2
    ha = list(params[:na - 1])
    hb = list(params[na - 1:])
    # Close the sums: the middle entry absorbs the remainder.
    nb = (stages + 1) // 2
    if (stages + 1) % 2 == 0:  # a has even length, no middle entry
        ha_full = ha + [0.5 - sum(ha)]
        a = ha_full + ha_full[::-1]
    else:
        a = ha + [1 - 2 * sum(ha)] + ha[::-1]
    if stages % 2 == 1:
        b = hb + [1 - 2 * sum(hb)] + hb[::-1]
    else:
        hb_full = hb + [0.5 - sum(hb)]
        b = hb_full + hb_full[::-1]
    assert len(a) == stages + 1 and len(b) == stages, (len(a), len(b), nb)
    return a, b


def param_count(stages):
    na = (stages + 2) // 2
    nb = (stages + 1) // 2
    return (na - 1) + (nb - 1)


def residual_vector(params, stages, max_order):
    a, b = expand(params, stages)
    return np.array(Rkn(a, b, "np").residuals(max_order))


def independent_rows(fun, x, eps=1e-7):
    base = fun(x)
    jac = np.empty((base.size, x.size))
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = eps
        jac[:, k] = (fun(x + step) - fun(x - step)) / (2 * eps)
    _, r, piv = qr(jac.T, pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > diag[0] * 1e-8))
    return np.sort(piv[:rank])


def gauss_newton(fun, x, iterations=80, eps=1e-7):
    """Damped minimum-norm Gauss-Newton with a central-difference Jacobian."""
    r = fun(x)
    norm = np.linalg.norm(r)
    for _ in range(iterations):
        jac = np.empty((r.size, x.size))
        for k in range(x.size):
            e = np.zeros(x.size)
            e[k] = eps
            jac[:, k] = (fun(x + e) - fun(x - e)) / (2 * eps)
        step = np.linalg.lstsq(jac, r, rcond=1e-8)[0]
        lam = 1.0
        while lam > 1e-4:
            xn = x - lam * step
            rn = fun(xn)
            nn = np.linalg.norm(rn)
            if nn < norm:
                break
            lam /= 2
        else:
            break
        x, r, norm = xn, rn, nn
        if norm < 1e-14:
            break
    return x, norm


def staged_search(args, m, rng):
    if args.stage_order is None:
        sys.exit("--solver staged needs --stage-order")
    for start in range(args.starts):
        x = args.center + rng.uniform(-0.5 * args.spread, args.spread, m)
        x, norm = gauss_newton(lambda v: residual_vector(v, args.stages, args.stage_order), x)
        x, norm = gauss_newton(lambda v: residual_vector(v, args.stages, args.order), x)
        a, b = expand(x, args.stages)
        if norm < 1e-12 and max(abs(v) for v in a + b) <= 2.0:
            print(f"start {start}: sum|coef| {sum(abs(v) for v in a + b):.4f}", file=sys.stderr)
            return (0.0, x)
    return None


def polish(x, stages, max_order, iterations=10):
    x = mpmath.matrix([mpmath.mpf(repr(float(v))) for v in x])
    m = len(x)

    def res(vec):
        a, b = expand(list(vec), stages)
        return Rkn(a, b, "mp").residuals(max_order)

    for it in range(iterations):
        r = mpmath.matrix(res(x))
        norm = mpmath.norm(r, mpmath.inf)
        print(f"  polish iter {it}: |r| = {mpmath.nstr(norm, 5)}", file=sys.stderr)
        if norm < mpmath.mpf(10) ** -36:
            break
        eps = mpmath.mpf(10) ** -20
        jac = mpmath.matrix(len(r), m)
        for k in range(m):
            xp = x.copy()
            xp[k] += eps
            xm = x.copy()
            xm[k] -= eps
            rp = res(xp)
            rm = res(xm)
            for i in range(len(r)):
                jac[i, k] = (rp[i] - rm[i]) / (2 * eps)
        U, S, V = mpmath.svd_r(jac)
        step = mpmath.matrix(m, 1)
        smax = max(S[i] for i in range(len(S)))
        for i in range(len(S)):
            if S[i] > smax * mpmath.mpf(10) ** -25:
                coef = sum(U[j, i] * r[j] for j in range(len(r))) / S[i]
                for k in range(m):
                    step[k] += coef * V[i, k]
        x = x - step
    return list(x), max(abs(v) for v in res(x))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("order", type=int)
    parser.add_argument("stages", type=int)
    parser.add_argument("name")
    parser.add_argument("outfile")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--center", type=float, default=0.0)
    parser.add_argument("--spread", type=float, default=0.3)
    parser.add_argument("--starts", type=int, default=100)
    parser.add_argument("--polish", default=None)
    parser.add_argument("--source", default=None)
    parser.add_argument("--solver", choices=["lm", "staged"], default="lm")
    parser.add_argument("--stage-order", type=int, default=None)
    args = parser.parse_args()
    mpmath.mp.dps = 40

    m = param_count(args.stages)
    rng = np.random.default_rng(args.seed)

    def fun(x):
        return residual_vector(x, args.stages, args.order)

    def next_order_error(x):
        full = residual_vector(x, args.stages, args.order + 1)
        return float(np.sum(full[fun(x).size:] ** 2))

    best = None
    if args.polish:
        vals = [float(l) for l in open(args.polish) if l.strip() and not l.startswith("#")]
        a0, b0 = vals[:args.stages + 1], vals[args.stages + 1:]
        na = (args.stages + 2) // 2
        nb = (args.stages + 1) // 2
        best = (0.0, np.array(a0[:na - 1] + b0[:nb - 1]))
    elif args.solver == "staged":
        best = staged_search(args, m, rng)
    for start in range(0 if best else args.starts):
        x0 = args.center + rng.uniform(-args.spread, args.spread, m)
        sol = least_squares(fun, x0, method="lm", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=3000)
        if np.max(np.abs(sol.fun)) > 1e-12:
            continue
        x = sol.x
        rows = independent_rows(fun, x)
        if len(rows) < m:
            cons = {"type": "eq", "fun": lambda v, rows=rows: fun(v)[rows]}
            opt = minimize(next_order_error, x, constraints=[cons],
                           method="trust-constr",
                           options={"xtol": 1e-14, "gtol": 1e-14, "maxiter": 300})
            if np.max(np.abs(fun(opt.x))) < 1e-11:
                x = opt.x
        a, b = expand(x, args.stages)
        if max(abs(v) for v in a + b) > 2.0:
            continue
        score = next_order_error(x)
        if best is None or score < best[0]:
            best = (score, x)
            print(f"start {start}: next-order error {score:.3e},"
                  f" sum|coef| {sum(abs(v) for v in a + b):.4f}",
                  file=sys.stderr)
    if best is None:
        sys.exit("no solution found")

    x, residual = polish(best[1], args.stages, args.order)
    a, b = expand(x, args.stages)
    print(f"final residual {mpmath.nstr(residual, 5)}", file=sys.stderr)
    with open(args.outfile, "w") as out:
        out.write(f"# name {args.name}\n")
        out.write(f"# order {args.order}\n")
        out.write("# type ab\n")
        out.write(f"# stages {args.stages}\n")
        if args.source:
            out.write(f"# source {args.source}\n")
        elif args.polish:
            out.write(f"# source derived by tools/coefficients/derive_rkn.py --polish {args.polish}\n")
        else:
            out.write("# source derived by tools/coefficients/derive_rkn.py"
                      f" --seed {args.seed} --starts {args.starts}"
                      f" --center {args.center:g} --spread {args.spread:g}")
            if args.solver == "staged":
                out.write(f" --solver staged --stage-order {args.stage_order}")
            out.write("\n")
        out.write(f"# residual {mpmath.nstr(residual, 3)}\n")
        for v in a + b:
            out.write(mpmath.nstr(v, 25, min_fixed=-mpmath.inf,
                                  max_fixed=mpmath.inf) + "\n")


if __name__ == "__main__":
    main()
