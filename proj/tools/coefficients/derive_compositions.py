#!/usr/bin/env python3
"""Derive palindromic composition weights of a given order.

A time-symmetric second-order base step has a logarithm of the form
h Y1 + h^3 Y3 + h^5 Y5 + ...  The composition of s such steps with weights
gamma_j is expanded in the truncated free associative algebra generated by
Y1, Y3, Y5, ... (graded by subscript).  Requiring log(composition) = h Y1 up
to the target order gives polynomial equations in the weights.

Solutions are located from random starts, by default with Levenberg-Marquardt
keeping the one with the smallest sum |gamma_j|.  With --solver staged each
start is first driven onto the conditions of order --stage-order and then
onto the full set by minimum-norm Gauss-Newton, and the first start that
converges is kept.  The result is polished with Newton iterations in 40-digit
arithmetic before being written out.

Usage: derive_compositions.py ORDER STAGES NAME OUTFILE [--seed N] [--starts N] [--center X] [--spread X]
                              [--solver lm|staged] [--stage-order N]
       derive_compositions.py ORDER STAGES NAME OUTFILE --polish FILE

With --polish the search is skipped and the first (STAGES + 1) / 2 weights
in FILE (one per line, "#" lines ignored) are refined onto the conditions.
"""

import argparse
import sys

import mpmath
import numpy as np
from scipy.linalg import qr
from scipy.optimize import least_squares, minimize


def odd_words(max_weight):
    words = [()]
    frontier = [()]
    while frontier:
        nxt = []
        for w in frontier:
            used = sum(w)
            for g in range(1, max_weight - used + 1, 2):
                nxt.append(w + (g,))
        words.extend(nxt)
        frontier = nxt
    return words


class Algebra:
    def __init__(self, max_weight, fast=False):
        self.max_weight = max_weight
        self.fast = fast
        self.words = odd_words(max_weight)
        self.index = {w: i for i, w in enumerate(self.words)}
        self.weight = np.array([sum(w) for w in self.words])
        I, J, K = [], [], []
        for i, u in enumerate(self.words):
            for j, v in enumerate(self.words):
                if sum(u) + sum(v) <= max_weight:
                    I.append(i)
                    J.append(j)
                    K.append(self.index[u + v])
        self.I = np.array(I)
        self.J = np.array(J)
        self.K = np.array(K)
        self.n = len(self.words)
        self.residual_rows = [i for i, w in enumerate(self.words)
                              if sum(w) >= 3 and sum(w) % 2 == 1]
        self.y1 = self.index[(1,)]

    def mul(self, a, b, xp=np):
        if self.fast:
            return np.bincount(self.K, weights=a[self.I] * b[self.J], minlength=self.n)
        c = np.zeros(self.n, dtype=a.dtype)
        np.add.at(c, self.K, a[self.I] * b[self.J])
        return c

    def exp_nilpotent(self, x):
        result = np.zeros(self.n, dtype=x.dtype)
        result[0] = 1
        term = result.copy()
        for k in range(1, self.max_weight + 1):
            term = self.mul(term, x) / k
            result = result + term
        return result

    def log_unipotent(self, p):
        x = p.copy()
        x[0] -= 1
        result = np.zeros(self.n, dtype=p.dtype)
        power = x.copy()
        for k in range(1, self.max_weight + 1):
            result = result + ((-1) ** (k + 1)) * power / k
            power = self.mul(power, x)
        return result

    def base_log(self, gamma):
        x = np.zeros(self.n)
        for g in range(1, self.max_weight + 1, 2):
            x[self.index[(g,)]] = gamma ** g
        return x

    def composition_log(self, gammas):
        prod = np.zeros(self.n)
        prod[0] = 1
        for g in gammas:
            prod = self.mul(self.exp_nilpotent(self.base_log(g)), prod)
        return self.log_unipotent(prod)

    def residuals(self, gammas):
        log = self.composition_log(gammas)
        return np.concatenate(([log[self.y1] - 1.0], log[self.residual_rows]))


def independent_rows(fun, x, eps=1e-7):
    """Rows of the residual Jacobian at x that are linearly independent."""
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


def expand(half, stages):
    half = list(half)
    if stages % 2 == 1:
        return half + half[-2::-1]
    return half + half[::-1]


# 40-digit polishing, same algebra with mpmath scalars held in Python lists.
class MpAlgebra:
    def __init__(self, alg):
        self.alg = alg
        self.table = list(zip(alg.I.tolist(), alg.J.tolist(), alg.K.tolist()))

    def mul(self, a, b):
        c = [mpmath.mpf(0)] * self.alg.n
        for i, j, k in self.table:
            if a[i] and b[j]:
                c[k] += a[i] * b[j]
        return c

    def exp_nilpotent(self, x):
        result = [mpmath.mpf(0)] * self.alg.n
        result[0] = mpmath.mpf(1)
        term = list(result)
        for k in range(1, self.alg.max_weight + 1):
            term = [t / k for t in self.mul(term, x)]
            result = [r + t for r, t in zip(result, term)]
        return result

    def log_unipotent(self, p):
        x = list(p)
        x[0] -= 1
        result = [mpmath.mpf(0)] * self.alg.n
        power = list(x)
        for k in range(1, self.alg.max_weight + 1):
            sign = 1 if k % 2 == 1 else -1
            result = [r + sign * q / k for r, q in zip(result, power)]
            power = self.mul(power, x)
        return result

    def residuals(self, gammas):
        prod = [mpmath.mpf(0)] * self.alg.n
        prod[0] = mpmath.mpf(1)
        for g in gammas:
            x = [mpmath.mpf(0)] * self.alg.n
            for d in range(1, self.alg.max_weight + 1, 2):
                x[self.alg.index[(d,)]] = g ** d
            prod = self.mul(self.exp_nilpotent(x), prod)
        log = self.log_unipotent(prod)
        return [log[self.alg.y1] - 1] + [log[i] for i in self.alg.residual_rows]


def polish(alg, half, stages, iterations=8):
    mp_alg = MpAlgebra(alg)
    x = mpmath.matrix([mpmath.mpf(repr(float(v))) for v in half])
    m = len(half)
    for it in range(iterations):
        r = mpmath.matrix(mp_alg.residuals(expand(list(x), stages)))
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
            rp = mp_alg.residuals(expand(list(xp), stages))
            rm = mp_alg.residuals(expand(list(xm), stages))
            for i in range(len(r)):
                jac[i, k] = (rp[i] - rm[i]) / (2 * eps)
        # Minimum-norm Gauss-Newton step through the SVD; rank is detected
        # from the singular values so redundant rows are harmless.
        U, S, V = mpmath.svd_r(jac)
        step = mpmath.matrix(m, 1)
        smax = max(S[i] for i in range(len(S)))
        for i in range(len(S)):
            if S[i] > smax * mpmath.mpf(10) ** -25:
                coef = sum(U[j, i] * r[j] for j in range(len(r))) / S[i]
                for k in range(m):
                    step[k] += coef * V[i, k]
        x = x - step
    r = mp_alg.residuals(expand(list(x), stages))
    return list(x), max(abs(v) for v in r)


def staged_search(args, m, rng):
    if args.stage_order is None:
        sys.exit("--solver staged needs --stage-order")
    coarse_alg = Algebra(args.stage_order - 1, fast=True)
    fine_alg = Algebra(args.order - 1, fast=True)

    def coarse(half):
        return coarse_alg.residuals(expand(half, args.stages))

    def fine(half):
        return fine_alg.residuals(expand(half, args.stages))

    for start in range(args.starts):
        x, norm = gauss_newton(coarse, args.center + rng.uniform(-args.spread, args.spread, m))
        if norm > 1e-12:
            continue
        x, norm = gauss_newton(fine, x)
        if norm < 1e-12:
            score = np.sum(np.abs(expand(x, args.stages)))
            print(f"start {start}: sum|gamma| = {score:.6f}", file=sys.stderr)
            return (score, x)
    return None


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("order", type=int)
    parser.add_argument("stages", type=int)
    parser.add_argument("name")
    parser.add_argument("outfile")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--center", type=float, default=0.0)
    parser.add_argument("--spread", type=float, default=1.0)
    parser.add_argument("--starts", type=int, default=200)
    parser.add_argument("--solver", choices=["lm", "staged"], default="lm")
    parser.add_argument("--stage-order", type=int, default=None)
    parser.add_argument("--polish", default=None)
    args = parser.parse_args()

    mpmath.mp.dps = 40
    alg = Algebra(args.order - 1)
    m = (args.stages + 1) // 2
    rng = np.random.default_rng(args.seed)

    def fun(half):
        return alg.residuals(expand(half, args.stages))

    best = None
    if args.polish:
        vals = [float(l) for l in open(args.polish) if l.strip() and not l.startswith("#")]
        best = (0.0, np.array(vals[:m]))
    elif args.solver == "staged":
        best = staged_search(args, m, rng)
    for start in range(0 if best else args.starts):
        x0 = args.center + rng.uniform(-args.spread, args.spread, m)
        sol = least_squares(fun, x0, method="lm", xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, max_nfev=4000)
        if np.max(np.abs(sol.fun)) > 1e-12:
            continue
        x = sol.x
        # Where the weights are not isolated, push toward small sum |gamma|.
        rows = independent_rows(fun, x)
        if len(rows) == m:
            cons = None
        else:
            cons = {"type": "eq", "fun": lambda h, rows=rows: fun(h)[rows]}
        if cons is not None:
            opt = minimize(lambda h: np.sum(np.abs(expand(h, args.stages))), x,
                           constraints=[cons], method="trust-constr",
                           options={"xtol": 1e-14, "gtol": 1e-14, "maxiter": 400})
            if np.max(np.abs(fun(opt.x))) < 1e-11:
                x = opt.x
        score = np.sum(np.abs(expand(x, args.stages)))
        if best is None or score < best[0]:
            best = (score, x)
            print(f"start {start}: sum|gamma| = {score:.6f}", file=sys.stderr)
    if best is None:
        sys.exit("no solution found")

    half, residual = polish(alg, best[1], args.stages)
    gammas = expand(half, args.stages)
    print(f"final residual {mpmath.nstr(residual, 5)}", file=sys.stderr)
    with open(args.outfile, "w") as out:
        out.write(f"# name {args.name}\n")
        out.write(f"# order {args.order}\n")
        out.write("# type gamma\n")
        out.write(f"# stages {args.stages}\n")
        out.write("# source derived by tools/coefficients/derive_compositions.py")
        if args.polish:
            out.write(f" --polish {args.polish}\n")
        else:
            out.write(f" --seed {args.seed} --starts {args.starts}"
                      f" --center {args.center:g} --spread {args.spread:g}")
            if args.solver == "staged":
                out.write(f" --solver staged --stage-order {args.stage_order}")
            out.write("\n")
        out.write(f"# residual {mpmath.nstr(residual, 3)}\n")
        for g in gammas:
            out.write(mpmath.nstr(g, 25, min_fixed=-mpmath.inf, max_fixed=mpmath.inf) + "\n")


if __name__ == "__main__":
    main()
