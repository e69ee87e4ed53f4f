#!/usr/bin/env python3
"""Derive, verify and freeze the coefficient tables in src/rgpe/_tables.py.

Everything runs in a truncated tensor algebra over graded letters: an element
maps words (tuples of letter ids) to coefficients, and products drop words
whose total grade exceeds the cap.  Two letter sets are used:

* exponential-integrator conditions: letters a1, a2, a3 of grades 1, 2, 3
  (the Legendre combinations of the sampled Hamiltonian, each carrying its
  power of the step h).  The exact flow of the quadratic interpolant is
  computed by Picard iteration with polynomial-in-time coefficients; its
  logarithm is the Magnus series the stage compositions must reproduce.
* splitting conditions: letters A, B of grade 1 with target A + B.  For the
  Nystroem-type tables the residual only has to vanish modulo the ideal
  generated by [B,[B,[B,A]]], which is identically zero when B acts by
  multiplication -- the case in the solver, where B is the potential plus
  the modulus-frozen nonlinear term.

Order conditions are solved by damped Gauss-Newton in float64 on a
vectorized copy of the algebra, then refined to ~50 digits with mpmath, so
the frozen 40-digit tables sit on the order-condition variety essentially
exactly.  Empirical matrix-exponential order checks (including a B with
B^2 = 0, for which the Nystroem ideal vanishes identically) confirm every
table before it is written out.

Run with no arguments from the repository root; writes src/rgpe/_tables.py
and prints a verification report.
"""

import os

import numpy as np
import mpmath as mp
from scipy.linalg import expm
from scipy.integrate import solve_ivp

mp.mp.dps = 60

HERE = os.path.dirname(os.path.abspath(__file__))
OUT_PATH = os.path.join(HERE, "..", "src", "rgpe", "_tables.py")


# ----------------------------------------------------------------------
# dict-backed algebra (works for float or mpmath coefficients)
# ----------------------------------------------------------------------

class Alg:
    def __init__(self, grades, cap, one=1.0):
        self.grades = tuple(grades)
        self.cap = cap
        self.one = one
        self.zero = 0 * one
        self._wg = {(): 0}
        self.words = self._gen_words()

    def _gen_words(self):
        words = [()]
        frontier = [()]
        while frontier:
            nxt = []
            for w in frontier:
                for i in range(len(self.grades)):
                    if self.wgrade(w) + self.grades[i] <= self.cap:
                        nxt.append(w + (i,))
            words.extend(nxt)
            frontier = nxt
        return sorted(set(words), key=lambda w: (self.wgrade(w), w))

    def wgrade(self, w):
        g = self._wg.get(w)
        if g is None:
            g = sum(self.grades[i] for i in w)
            self._wg[w] = g
        return g

    def unit(self):
        return {(): self.one}

    def letter(self, i, c=None):
        return {(i,): self.one if c is None else c * self.one}

    def add(self, a, b, cb=1):
        out = dict(a)
        for w, c in b.items():
            out[w] = out.get(w, self.zero) + cb * c
        return out

    def mul(self, a, b):
        out = {}
        cap, wg = self.cap, self.wgrade
        for wa, ca in a.items():
            ga = wg(wa)
            for wb, cb in b.items():
                if ga + wg(wb) <= cap:
                    w = wa + wb
                    if w in out:
                        out[w] += ca * cb
                    else:
                        out[w] = ca * cb
        return out

    def bracket(self, a, b):
        return self.add(self.mul(a, b), self.mul(b, a), -1)

    def expx(self, x):
        out = self.unit()
        term = self.unit()
        for k in range(1, self.cap + 1):
            term = {w: c * self.one / k for w, c in self.mul(term, x).items()}
            if not term:
                break
            out = self.add(out, term)
        return out

    def logx(self, s):
        z = dict(s)
        z[()] = z.get((), self.zero) - self.one
        z = {w: c for w, c in z.items() if w != ()}
        out = {}
        zk = self.unit()
        for k in range(1, self.cap + 1):
            zk = self.mul(zk, z)
            if not zk:
                break
            out = self.add(out, zk, ((-1) ** (k + 1)) * self.one / k)
        return out

    def nest(self, ids):
        """Right-nested bracket [a_{i0}, [a_{i1}, [ ... ]]]."""
        if len(ids) == 1:
            return self.letter(ids[0])
        return self.bracket(self.letter(ids[0]), self.nest(ids[1:]))

    def coeffs(self, a, words):
        return [a.get(w, self.zero) for w in words]


def elem_maxabs(a):
    return max((abs(c) for c in a.values()), default=0.0)


# ----------------------------------------------------------------------
# float64 vectorized algebra (same words, numpy coefficient vectors)
# ----------------------------------------------------------------------

class VecAlg:
    def __init__(self, grades, cap):
        ref = Alg(grades, cap, 1.0)
        self.grades = tuple(grades)
        self.cap = cap
        self.words = ref.words
        self.index = {w: i for i, w in enumerate(self.words)}
        self.wgrades = np.array([ref.wgrade(w) for w in self.words])
        self.n = len(self.words)
        iu, iv, iw = [], [], []
        for u in self.words:
            gu = ref.wgrade(u)
            for v in self.words:
                if gu + ref.wgrade(v) <= cap:
                    iu.append(self.index[u])
                    iv.append(self.index[v])
                    iw.append(self.index[u + v])
        self.iu = np.array(iu)
        self.iv = np.array(iv)
        self.iw = np.array(iw)

    def unit(self):
        out = np.zeros(self.n)
        out[0] = 1.0
        return out

    def letter(self, i, c=1.0):
        out = np.zeros(self.n)
        out[self.index[(i,)]] = c
        return out

    def from_dict(self, d):
        out = np.zeros(self.n)
        for w, c in d.items():
            out[self.index[w]] = float(c)
        return out

    def mul(self, a, b):
        return np.bincount(self.iw, weights=a[self.iu] * b[self.iv],
                           minlength=self.n)

    def bracket(self, a, b):
        return self.mul(a, b) - self.mul(b, a)

    def expx(self, x):
        out = self.unit()
        term = self.unit()
        for k in range(1, self.cap + 1):
            term = self.mul(term, x) / k
            if not term.any():
                break
            out = out + term
        return out

    def logx(self, s):
        z = s.copy()
        z[0] -= 1.0
        out = np.zeros(self.n)
        zk = self.unit()
        for k in range(1, self.cap + 1):
            zk = self.mul(zk, z)
            if not zk.any():
                break
            out = out + ((-1) ** (k + 1)) * zk / k
        return out

    def nest(self, ids):
        if len(ids) == 1:
            return self.letter(ids[0])
        return self.bracket(self.letter(ids[0]), self.nest(ids[1:]))


# ----------------------------------------------------------------------
# exact flow of a polynomial-in-time generator via Picard iteration
# ----------------------------------------------------------------------

def picard_endpoint(alg, gens):
    """Solve dU/ds = G(s) U on s in [-1/2, 1/2], U(-1/2) = 1; return U(1/2).

    gens: list of (letter_id, power); G(s) = sum_i letter_i * s^power_i.
    Word coefficients of U are kept as ascending polynomials in s.
    """
    one, zero = alg.one, alg.zero
    half = one / 2

    def padd(p, q):
        n = max(len(p), len(q))
        return [(p[k] if k < len(p) else zero) + (q[k] if k < len(q) else zero)
                for k in range(n)]

    def pval(p, x):
        v = zero
        for c in reversed(p):
            v = v * x + c
        return v

    U = {(): [one]}
    for _ in range(alg.cap + 1):
        V = {}
        for w, poly in U.items():
            gw = alg.wgrade(w)
            for li, m in gens:
                if gw + alg.grades[li] <= alg.cap:
                    nw = (li,) + w
                    npoly = [zero] * m + list(poly)
                    V[nw] = padd(V[nw], npoly) if nw in V else npoly
        U2 = {(): [one]}
        for w, poly in V.items():
            anti = [zero] + [c / (k + 1) for k, c in enumerate(poly)]
            anti[0] = -pval(anti, -half)
            U2[w] = anti
        U = U2
    return {w: pval(p, half) for w, p in U.items()
            if any(c != zero for c in p)}


# ----------------------------------------------------------------------
# projections modulo an ideal span
# ----------------------------------------------------------------------

def projector_float(span_vectors):
    """span_vectors: list of 1-D numpy arrays; returns r -> r - proj_span(r)."""
    span_vectors = [v for v in span_vectors if np.linalg.norm(v) > 1e-14]
    if not span_vectors:
        return lambda r: r
    M = np.array(span_vectors).T
    Q, R = np.linalg.qr(M)
    keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(np.diag(R)).max())
    Q = Q[:, keep]
    return lambda r: r - Q @ (Q.T @ r)


def projector_mp(span_vectors):
    """Same, for lists of mpmath numbers, via Gram-Schmidt."""
    basis = []
    for v in span_vectors:
        v = list(v)
        for u in basis:
            d = mp.fsum(ui * vi for ui, vi in zip(u, v))
            v = [vi - d * ui for ui, vi in zip(u, v)]
        nv = mp.sqrt(mp.fsum(vi * vi for vi in v))
        if nv > mp.mpf(10) ** -30:
            basis.append([vi / nv for vi in v])

    def proj(r):
        r = list(r)
        for u in basis:
            d = mp.fsum(ui * ri for ui, ri in zip(u, r))
            r = [ri - d * ui for ui, ri in zip(u, r)]
        return r

    return proj


# ----------------------------------------------------------------------
# damped Gauss-Newton with finite-difference Jacobians
# ----------------------------------------------------------------------

def gauss_newton(resfun, x0, tol, itmax=80, mp_mode=False):
    x = list(x0)
    n = len(x)
    r = resfun(x)
    rn2 = float(np.linalg.norm([float(v) for v in r]))
    for _ in range(itmax):
        rmax = max(abs(float(v)) for v in r) if r else 0.0
        if rmax < tol:
            return x, rmax
        h = mp.mpf(10) ** (-25) if mp_mode else 1e-7
        J = np.zeros((len(r), n))
        for j in range(n):
            xp = list(x)
            xp[j] = xp[j] + h
            rp = resfun(xp)
            J[:, j] = [float((a - b) / h) for a, b in zip(rp, r)]
        rv = np.array([float(v) for v in r])
        dx, *_ = np.linalg.lstsq(J, -rv, rcond=None)
        ndx = float(np.linalg.norm(dx))
        if not np.isfinite(ndx) or ndx == 0.0:
            break
        if ndx > 2.0:
            dx *= 2.0 / ndx
        t, xt, rt, rtn2 = 1.0, x, r, rn2
        for _ in range(15):
            if mp_mode:
                xt = [xi + t * mp.mpf(repr(float(d))) for xi, d in zip(x, dx)]
            else:
                xt = [xi + t * d for xi, d in zip(x, dx)]
            rt = resfun(xt)
            rtn2 = float(np.linalg.norm([float(v) for v in rt]))
            if rtn2 < rn2 or rtn2 < tol:
                break
            t *= 0.5
        if rtn2 >= rn2 and rtn2 >= tol:
            break
        x, r, rn2 = xt, rt, rtn2
    return x, max(abs(float(v)) for v in resfun(x))


# ----------------------------------------------------------------------
# exponential-integrator side (letters a1, a2, a3; grades 1, 2, 3)
# ----------------------------------------------------------------------

def cfqm_target_dict(cap):
    alg = Alg((1, 2, 3), cap, mp.mpf(1))
    U = picard_endpoint(alg, [(0, 0), (1, 1), (2, 2)])
    return alg, alg.logx(U)


def magnus6_reference(alg):
    terms = [((0,), 1, 1), ((2,), 1, 12), ((0, 1), -1, 12), ((1, 2), 1, 240),
             ((0, 0, 2), 1, 360), ((1, 0, 1), -1, 240), ((0, 0, 0, 1), 1, 720)]
    out = {}
    for ids, num, den in terms:
        out = alg.add(out, alg.nest(ids), alg.one * num / den)
    return out


def check_engine():
    print("== engine self-check: log of the interpolant flow vs the grade-6 table")
    alg, T = cfqm_target_dict(6)
    ref = magnus6_reference(alg)
    err = elem_maxabs(alg.add(T, ref, -1))
    print(f"   max coefficient difference through grade 6: {mp.nstr(err, 3)}")
    assert err < mp.mpf(10) ** -50, "engine self-check failed"
    for g in (2, 4, 6):
        part = {w: c for w, c in T.items() if alg.wgrade(w) == g}
        assert elem_maxabs(part) < mp.mpf(10) ** -50
    print("   OK: grades 2/4/6 vanish; coefficients 1, 1/12, -1/12, 1/240,")
    print("       1/360, -1/240, 1/720 all reproduced to 50+ digits")


def compose_exponentials(alg, exponents):
    """Operator product for u1 = exp(X_J) ... exp(X_1) u0 (X_1 applied first)."""
    S = alg.unit()
    for X in exponents:
        S = alg.mul(alg.expx(X), S)
    return S


def pqr_rows(x, J):
    """Unpack free parameters into palindromic (p, q, r) stage rows."""
    if J % 2 == 0:
        half = [(x[3 * j], x[3 * j + 1], x[3 * j + 2]) for j in range(J // 2)]
    else:
        half = [(x[3 * j], x[3 * j + 1], x[3 * j + 2]) for j in range(J // 2)]
        half.append((x[-2], 0 * x[-2], x[-1]))
    rows = list(half)
    for j in range(J - len(half) - 1, -1, -1):
        p, q, r = half[j]
        rows.append((p, -q, r))
    return rows


def pqr_to_nodes(p, q, r):
    """Stage exponent p*a1 + q*a2 + r*a3 -> per-node weights (w1, w2, w3)."""
    s15 = mp.sqrt(15)
    w1 = -q * s15 / 3 + r * mp.mpf(10) / 3
    w3 = q * s15 / 3 + r * mp.mpf(10) / 3
    w2 = p - w1 - w3
    return [w1, w2, w3]


def derive_cfqm_table(name, J, order, seeds, n_random=24, polish_weight=1e-3):
    print(f"== {name}: J={J} exponentials on three Gauss nodes, order {order}")
    nfree = 3 * (J // 2) + (2 if J % 2 else 0)
    capf = order + 1
    vec = VecAlg((1, 2, 3), capf)
    _, Tdict = cfqm_target_dict(capf)
    T = vec.from_dict(Tdict)
    mask_cond = (vec.wgrades >= 1) & (vec.wgrades <= order)
    mask_lead = vec.wgrades == capf

    def scheme(x):
        S = vec.unit()
        for p, q, r in pqr_rows(list(x), J):
            X = np.zeros(vec.n)
            X[vec.index[(0,)]] = p
            X[vec.index[(1,)]] = q
            X[vec.index[(2,)]] = r
            S = vec.mul(vec.expx(X), S)
        return vec.logx(S) - T

    def cond(x):
        return list(scheme(x)[mask_cond])

    def cond_polish(x):
        R = scheme(x)
        return list(R[mask_cond]) + list(polish_weight * R[mask_lead])

    rng = np.random.default_rng(20250819)
    trials = [list(s) for s in seeds]
    trials += [list(rng.uniform(-0.7, 0.7, nfree)) for _ in range(n_random)]
    best = None
    for k, x0 in enumerate(trials):
        x, rmax = gauss_newton(cond, x0, 1e-13, itmax=70)
        if rmax > 1e-12 or max(abs(v) for v in x) > 3.0:
            continue
        lead = float(np.linalg.norm(scheme(x)[mask_lead]))
        if best is None or lead < best[1]:
            best = (x, lead, k)
    assert best is not None, f"no {name} solution found"
    x0best, lead0, k = best
    print(f"   feasible from start #{k}; grade-{capf} defect {lead0:.3e}; polishing")
    x, _ = gauss_newton(cond_polish, list(x0best), 5e-14, itmax=150)
    x, rmax = gauss_newton(cond, x, 1e-14, itmax=25)
    lead = float(np.linalg.norm(scheme(x)[mask_lead]))
    if rmax > 1e-13 or lead > lead0:
        x, rmax = gauss_newton(cond, list(x0best), 1e-14, itmax=25)
        lead = float(np.linalg.norm(scheme(x)[mask_lead]))
        print(f"   polish rejected; keeping defect {lead:.3e}")
    else:
        print(f"   polished: conditions {rmax:.2e}, grade-{capf} defect {lead:.3e}")

    # 60-digit refinement on the conditions
    algm, Tm = cfqm_target_dict(order)
    words = [w for w in algm.words if 1 <= algm.wgrade(w) <= order]

    def condm(x):
        exps = []
        for p, q, r in pqr_rows(list(x), J):
            exps.append({(0,): p * algm.one, (1,): q * algm.one,
                         (2,): r * algm.one})
        R = algm.add(algm.logx(compose_exponentials(algm, exps)), Tm, -1)
        return algm.coeffs(R, words)

    xm = [mp.mpf(repr(float(v))) for v in x]
    xm, rmp = gauss_newton(condm, xm, mp.mpf(10) ** -48, itmax=14, mp_mode=True)
    print(f"   mp refinement residual: {mp.nstr(rmp, 3)}")
    assert rmp < mp.mpf(10) ** -43
    table = [pqr_to_nodes(*row) for row in pqr_rows(xm, J)]
    bj = [mp.fsum(r) for r in table]
    print("   kinetic weights b_j: " + ", ".join(mp.nstr(b, 8) for b in bj)
          + f";  sum-1 = {mp.nstr(mp.fsum(bj) - 1, 3)}")
    return table


def check_cf4():
    print("== cf4: two Gauss nodes, closed form")
    alg = Alg((1, 2), 4, mp.mpf(1))
    T = alg.logx(picard_endpoint(alg, [(0, 0), (1, 1)]))
    s3 = mp.sqrt(3)
    a11, a12 = mp.mpf(1) / 4 + s3 / 6, mp.mpf(1) / 4 - s3 / 6

    def to_md(u, v):  # node weights -> (mean, scaled difference) letters
        return {(0,): u + v, (1,): (v - u) / (2 * s3)}

    S = compose_exponentials(alg, [to_md(a11, a12), to_md(a12, a11)])
    err = elem_maxabs(alg.add(alg.logx(S), T, -1))
    print(f"   residual through grade 4, first stage (1/4+r3/6, 1/4-r3/6): {mp.nstr(err, 3)}")
    assert err < mp.mpf(10) ** -50
    swapped = compose_exponentials(alg, [to_md(a12, a11), to_md(a11, a12)])
    err2 = elem_maxabs(alg.add(alg.logx(swapped), T, -1))
    print(f"   (swapped stage order gives residual {mp.nstr(err2, 3)}: rejected)")
    assert err2 > mp.mpf(10) ** -6
    return [[a11, a12], [a12, a11]]


def resolve_bbk():
    """Decide the sign of the gradient-correction exponent in the 4-stage scheme."""
    print("== bbk: resolving the [2,[1,2]] correction sign")
    alg, T = cfqm_target_dict(6)
    words_by_grade = {g: [w for w in alg.words if alg.wgrade(w) == g]
                      for g in range(1, 7)}
    w5 = alg.nest((1, 2))
    proj = {5: projector_mp([alg.coeffs(w5, words_by_grade[5])]),
            6: projector_mp([alg.coeffs(alg.bracket(alg.letter(0), w5),
                                        words_by_grade[6])])}

    q1, r1 = -mp.mpf(1) / 60, mp.mpf(1) / 60
    r2 = mp.mpf(1) / 40
    half = mp.mpf(1) / 2
    w212 = alg.nest((1, 0, 1))
    results = {}
    for q2sign in (+1, -1):
        for ysign in (+1, -1):
            q2 = q2sign * mp.mpf(-2) / 15
            y = ysign * mp.mpf(1) / 43200
            X1 = alg.add({(1,): q1, (2,): r1}, w212, y)
            X2 = {(0,): half, (1,): q2, (2,): r2}
            X3 = {(0,): half, (1,): -q2, (2,): r2}
            X4 = alg.add({(1,): -q1, (2,): r1}, w212, y)
            S = compose_exponentials(alg, [X1, X2, X3, X4])
            R = alg.add(alg.logx(S), T, -1)
            worst = mp.mpf(0)
            for g in range(1, 7):
                v = alg.coeffs(R, words_by_grade[g])
                if g in proj:
                    v = proj[g](v)
                worst = max(worst, max((abs(c) for c in v), default=mp.mpf(0)))
            results[(q2sign, ysign)] = worst
            print(f"   q2 = {q2sign:+d}*(-2/15), y = {ysign:+d}/43200 : "
                  f"residual mod <[a2,a3]> = {mp.nstr(worst, 3)}")
    good = min(results, key=lambda k: float(results[k]))
    assert float(results[good]) < 1e-12, "no sign combination admits order 6"
    others = sorted(float(v) for k, v in results.items() if k != good)
    assert others[0] > 1e-8, "sign resolution is not unique"
    q2sign, ysign = good
    print(f"   resolved: second stage q2 = {q2sign:+d}*(-2/15); y = {ysign:+d}/43200")
    print(f"   pointwise stage-1/4 factor: exp(-i h (Wbar {'-' if ysign > 0 else '+'} h^2 Wtilde)),"
          " Wtilde = |grad dW|^2 / 25920 >= 0")
    a1 = pqr_to_nodes(mp.mpf(0), q1, r1)
    a2 = [2 * v for v in pqr_to_nodes(half, q2sign * mp.mpf(-2) / 15, r2)]
    s15 = mp.sqrt(15)
    ref1 = [(10 + s15) / 180, mp.mpf(-1) / 9, (10 - s15) / 180]
    ref2 = [(15 + 8 * s15) / 90, mp.mpf(2) / 3, (15 - 8 * s15) / 90]
    d1 = max(abs(u - v) for u, v in zip(a1, ref1))
    d2 = max(abs(u - v) for u, v in zip(a2, ref2))
    print(f"   node weights match their closed forms: stage 1 {mp.nstr(d1, 3)},"
          f" stage 2 (x2) {mp.nstr(d2, 3)}")
    assert d1 < mp.mpf(10) ** -55 and d2 < mp.mpf(10) ** -55
    return a1, a2, ysign


# ----------------------------------------------------------------------
# splitting side (letters A, B of grade 1; target A + B)
# ----------------------------------------------------------------------

def rkn_ideal_spans(algebra, grade_max):
    """Per-grade spans of the ideal generated by [B,[B,[B,A]]]."""
    w4 = algebra.nest((1, 1, 1, 0))
    spans = {4: [w4]}
    for g in range(5, grade_max + 1):
        spans[g] = [algebra.bracket(algebra.letter(i), el)
                    for el in spans[g - 1] for i in (0, 1)]
    return spans


def make_split_tools(order, cap, rkn):
    vec = VecAlg((1, 1), cap)
    T = vec.letter(0) + vec.letter(1)
    masks = [(g, vec.wgrades == g) for g in range(1, order + 1)]
    proj = {}
    if rkn:
        spans = rkn_ideal_spans(vec, cap)
        for g, el_list in spans.items():
            proj[g] = projector_float([el[vec.wgrades == g] for el in el_list])
    iA, iB = vec.index[(0,)], vec.index[(1,)]

    def resid(alphas, betas, use_masks):
        S = vec.unit()
        for al, be in zip(alphas, betas):
            if al:
                X = np.zeros(vec.n)
                X[iA] = al
                S = vec.mul(vec.expx(X), S)
            if be:
                X = np.zeros(vec.n)
                X[iB] = be
                S = vec.mul(vec.expx(X), S)
        R = vec.logx(S) - T
        out = []
        for g, mask in use_masks:
            v = R[mask]
            if g in proj:
                v = proj[g](v)
            out.extend(v)
        return out

    return vec, resid, masks


def mp_split_residual_factory(order, rkn):
    alg = Alg((1, 1), order, mp.mpf(1))
    Tm = alg.add(alg.letter(0), alg.letter(1))
    words_by_grade = {g: [w for w in alg.words if alg.wgrade(w) == g]
                      for g in range(1, order + 1)}
    proj = {}
    if rkn:
        spans = rkn_ideal_spans(alg, order)
        for g in range(4, order + 1):
            proj[g] = projector_mp([alg.coeffs(el, words_by_grade[g])
                                    for el in spans[g]])

    def resid(alphas, betas):
        S = alg.unit()
        for al, be in zip(alphas, betas):
            if al:
                S = alg.mul(alg.expx(alg.letter(0, al)), S)
            if be:
                S = alg.mul(alg.expx(alg.letter(1, be)), S)
        R = alg.add(alg.logx(S), Tm, -1)
        out = []
        for g in range(1, order + 1):
            v = alg.coeffs(R, words_by_grade[g])
            if g in proj:
                v = proj[g](v)
            out.extend(v)
        return out

    return resid


def derive_rkn74():
    print("== rkn74: 7 kinetic / 6 potential flows, palindromic, order 4")
    mem = [0.0829844064174052, 0.3963098014983680, -0.0390563049223486,
           0.2452989571842710, 0.6048726657110800, -0.3501716228953510]

    def unpack(x):
        a1, a2, a3, b1, b2, b3 = x
        a4 = 1 - 2 * (a1 + a2 + a3)
        return ([a1, a2, a3, a4, a3, a2, a1],
                [b1, b2, b3, b3, b2, b1, 0 * x[0]])

    vec, resid, masks = make_split_tools(4, 5, rkn=False)
    mask5 = [(5, vec.wgrades == 5)]

    def cond(x):
        al, be = unpack(x)
        return resid(al, be, masks)

    r0 = max(abs(v) for v in cond(mem))
    print(f"   recalled-digits point: max condition residual = {r0:.3e}")
    x, rmax = gauss_newton(cond, mem, 1e-14, itmax=50)
    moved = max(abs(a - b) for a, b in zip(x, mem))
    print(f"   float solve: residual {rmax:.2e}, moved {moved:.2e} from recalled digits")
    assert rmax < 1e-13

    residm = mp_split_residual_factory(4, rkn=False)

    def condm(x):
        al, be = unpack(x)
        return residm(al, be)

    xm = [mp.mpf(repr(float(v))) for v in x]
    xm, rmp = gauss_newton(condm, xm, mp.mpf(10) ** -48, itmax=12, mp_mode=True)
    print(f"   mp refinement residual: {mp.nstr(rmp, 3)}")
    assert rmp < mp.mpf(10) ** -43
    al, be = unpack(xm)
    lead = float(np.linalg.norm(resid([float(v) for v in al],
                                      [float(v) for v in be], mask5)))
    print(f"   grade-5 defect norm (leading error): {lead:.3e}")
    return al, be


def derive_rkn116():
    print("== rkn116: 11 kinetic / 10 potential flows, palindromic, order 6")
    print("   (order-6 conditions taken modulo the [B,[B,[B,A]]] ideal)")

    def unpack(x):
        a = list(x[:6])
        b = list(x[6:11])
        return (a + [a[4], a[3], a[2], a[1], a[0]],
                b + [b[4], b[3], b[2], b[1], b[0], 0 * x[0]])

    vec, resid, masks = make_split_tools(6, 7, rkn=True)
    spans7 = rkn_ideal_spans(vec, 7)
    proj7 = projector_float([el[vec.wgrades == 7] for el in spans7[7]])
    mask7 = [(7, vec.wgrades == 7)]

    def cond(x):
        al, be = unpack(x)
        return resid(al, be, masks)

    def lead(x):
        al, be = unpack(x)
        return np.array(proj7(np.array(resid(al, be, mask7))))

    # seeds: ten-fold composition of the kinetic-first Strang kernel
    def gamma_to_x(g):
        gam = list(g) + [g[4], g[3], g[2], g[1], g[0]]
        alphas = [gam[0] / 2] + [(gam[i] + gam[i + 1]) / 2 for i in range(5)]
        return alphas + gam[:5]

    _, gresid, gmasks = make_split_tools(6, 7, rkn=False)

    def gcond(g):
        gam = list(g) + [g[4], g[3], g[2], g[1], g[0]]
        alphas = [gam[0] / 2] + [(gam[i] + gam[i + 1]) / 2 for i in range(9)] \
            + [gam[9] / 2]
        betas = gam + [0.0]
        return gresid(alphas, betas, gmasks)

    rng = np.random.default_rng(1719)
    trials = []
    for k in range(80):
        g0 = list(rng.uniform(-0.8, 1.1, 5))
        g, rmax = gauss_newton(gcond, g0, 1e-13, itmax=70)
        if rmax < 1e-12 and max(abs(v) for v in g) < 1.6:
            print(f"   composed-Strang seed (start #{k}): gamma = "
                  + ", ".join(f"{v:+.6f}" for v in g))
            trials.append(gamma_to_x(g))
            if len(trials) >= 3:
                break
    trials += [list(rng.uniform(-0.6, 0.8, 11)) for _ in range(40)]

    best = None
    for k, x0 in enumerate(trials):
        x, rmax = gauss_newton(cond, x0, 1e-13, itmax=80)
        if rmax > 1e-12 or max(abs(v) for v in x) > 1.8:
            continue
        ln = float(np.linalg.norm(lead(x)))
        if best is None or ln < best[1]:
            best = (x, ln, k)
    assert best is not None, "no order-6 splitting found"
    x, l0, k = best
    print(f"   feasible from start #{k}: grade-7 defect (mod ideal) {l0:.3e}")

    def cond_polish(xx):
        return cond(xx) + list(5e-4 * lead(xx))

    xp, _ = gauss_newton(cond_polish, list(x), 5e-14, itmax=200)
    xp, rmax = gauss_newton(cond, xp, 1e-14, itmax=30)
    l1 = float(np.linalg.norm(lead(xp)))
    if rmax < 1e-13 and l1 < l0 and max(abs(v) for v in xp) < 2.0:
        print(f"   polish accepted: grade-7 defect {l1:.3e}")
        x = xp
    else:
        print(f"   polish rejected ({l1:.3e} vs {l0:.3e}); keeping feasible point")

    residm = mp_split_residual_factory(6, rkn=True)

    def condm(xx):
        al, be = unpack(xx)
        return residm(al, be)

    xm = [mp.mpf(repr(float(v))) for v in x]
    xm, rmp = gauss_newton(condm, xm, mp.mpf(10) ** -46, itmax=16, mp_mode=True)
    print(f"   mp refinement residual: {mp.nstr(rmp, 3)}")
    assert rmp < mp.mpf(10) ** -41
    al, be = unpack(xm)

    # diagnostic: without the ideal quotient the grade-5/6 residual is nonzero,
    # i.e. the table genuinely relies on B being a multiplication operator
    _, residf, masksf = make_split_tools(6, 7, rkn=False)
    g6 = max(abs(v) for v in residf([float(v) for v in al],
                                    [float(v) for v in be], masksf))
    print(f"   residual without the ideal quotient: {g6:.3e} (nonzero, expected)")
    return al, be


# ----------------------------------------------------------------------
# empirical order checks with matrix exponentials
# ----------------------------------------------------------------------

def _slope(hs, errs):
    hs, errs = np.asarray(hs), np.asarray(errs)
    keep = errs > 1e-13
    return np.polyfit(np.log(hs[keep]), np.log(errs[keep]), 1)[0]


def matrix_check_cfqm(tables, ysign):
    print("== empirical check: one-step error on random Hermitian matrices,")
    print("   dimension 12, DOP853 reference.  The full schemes run on a dense")
    print("   non-commuting H(t); the modified scheme drops the [a2,a3] term,")
    print("   which only vanishes when the sampled potentials commute, so it")
    print("   gets H(t) = A + diag(t), matching its use in the solver.")
    rng = np.random.default_rng(7)
    n = 12

    def herm():
        M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        return (M + M.conj().T) / (2 * np.sqrt(n))

    H0, H1, H2 = herm(), herm(), herm()
    Adense = herm()
    D0, D1, D2 = (np.diag(rng.normal(size=n)) for _ in range(3))

    def H(t, commuting=False):
        if commuting:
            return Adense + D0 + t * D1 + t * t * D2
        return H0 + t * H1 + t * t * H2

    psi0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    psi0 /= np.linalg.norm(psi0)

    def reference(h, commuting=False):
        def rhs(t, y):
            psi = y[:n] + 1j * y[n:]
            d = -1j * (H(t, commuting) @ psi)
            return np.concatenate([d.real, d.imag])
        sol = solve_ivp(rhs, (0.0, h), np.concatenate([psi0.real, psi0.imag]),
                        method="DOP853", rtol=1e-13, atol=1e-14)
        y = sol.y[:, -1]
        return y[:n] + 1j * y[n:]

    s15 = np.sqrt(15.0)
    c3 = [0.5 - s15 / 10, 0.5, 0.5 + s15 / 10]
    s3 = np.sqrt(3.0)
    nodes = {"cf2": [0.5], "cf4": [0.5 - s3 / 6, 0.5 + s3 / 6],
             "cf4af": c3, "cf6af": c3, "bbk": c3}

    hs = [0.4 / 2 ** j for j in range(6)]
    expected = {"cf2": 3, "cf4": 5, "cf4af": 5, "cf6af": 7, "bbk": 7}
    for name, table in tables.items():
        commuting = name == "bbk"
        errs = []
        for h in hs:
            Hk = [H(c * h, commuting) for c in nodes[name]]
            psi = psi0
            if name == "bbk":
                a1, a2 = table
                A1 = -1j * h * Hk[1]
                A2 = -1j * h * (s15 / 3) * (Hk[2] - Hk[0])
                A3 = -1j * h * (10.0 / 3) * (Hk[0] - 2 * Hk[1] + Hk[2])
                w212 = A2 @ (A1 @ A2 - A2 @ A1) - (A1 @ A2 - A2 @ A1) @ A2
                y = ysign / 43200.0
                stages = [
                    -1j * h * sum(a * Hm for a, Hm in zip(a1, Hk)) + y * w212,
                    -1j * (h / 2) * sum(a * Hm for a, Hm in zip(a2, Hk)),
                    -1j * (h / 2) * sum(a * Hm for a, Hm in zip(a2[::-1], Hk)),
                    -1j * h * sum(a * Hm for a, Hm in zip(a1[::-1], Hk)) + y * w212,
                ]
            else:
                stages = [-1j * h * sum(a * Hm for a, Hm in zip(row, Hk))
                          for row in table]
            for X in stages:
                psi = expm(X) @ psi
            errs.append(np.linalg.norm(psi - reference(h, commuting)))
        sl = _slope(hs, errs)
        print(f"   {name:6s}: local slope {sl:5.2f} (expected {expected[name]}),"
              f" err(h=0.4) = {errs[0]:.2e}")
        assert abs(sl - expected[name]) < 0.45, f"{name} order check failed"


def matrix_check_splittings(strang, rkn74, rkn116):
    print("== empirical check: splitting tables vs expm(h(A+B)), B nilpotent")
    print("   (B^2 = 0 makes [B,[B,[B,A]]] = 0 exactly, like a multiplier B)")
    rng = np.random.default_rng(11)
    n = 12
    A = rng.normal(size=(n, n)) / np.sqrt(n)
    B = np.zeros((n, n))
    B[: n // 2, n // 2:] = rng.normal(size=(n // 2, n // 2))
    v0 = rng.normal(size=n)
    v0 /= np.linalg.norm(v0)

    hs = [0.5 / 2 ** j for j in range(6)]
    for name, (al, be), p in (("strang", strang, 2), ("rkn74", rkn74, 4),
                              ("rkn116", rkn116, 6)):
        errs = []
        for h in hs:
            ref = expm(h * (A + B)) @ v0
            v = v0
            for a, b in zip(al, be):
                v = expm(h * float(a) * A) @ v
                if b:
                    v = v + h * float(b) * (B @ v)  # exact: B^2 = 0
            errs.append(np.linalg.norm(v - ref))
        sl = _slope(hs, errs)
        print(f"   {name:7s}: local slope {sl:5.2f} (expected {p + 1})")
        assert abs(sl - (p + 1)) < 0.45, f"{name} order check failed"


# ----------------------------------------------------------------------
# emission
# ----------------------------------------------------------------------

def _fmt_rows(name, rows):
    out = [f"{name} = _rows(["]
    for r in rows:
        vals = ", ".join('"' + mp.nstr(v, 41, strip_zeros=False) + '"' for v in r)
        out.append(f"    ({vals}),")
    out.append("])")
    return "\n".join(out)


def _fmt_vals(name, vals):
    body = ",\n    ".join('"' + mp.nstr(v, 41, strip_zeros=False) + '"'
                          for v in vals)
    return f"{name} = _vals([\n    {body},\n])"


def emit(cf4, cf4af, cf6af, bbk1, bbk2, ysign, r74, r116):
    s3, s15 = mp.sqrt(3), mp.sqrt(15)
    half = mp.mpf(1) / 2
    lines = [
        '"""Fixed numerical tables for the time-stepping schemes.',
        "",
        "Rows of the CF*_A tables are stage exponents of the commutator-free",
        "integrators, columns are Gauss-Legendre collocation nodes, first",
        "applied stage first.  The splitting tables are kinetic/potential",
        "coefficient lists of palindromic kinetic-first kernels with a trailing",
        "zero potential coefficient.  Values carry 40 significant digits and",
        "sit on their order-condition varieties to ~45 digits; they are",
        "generated and machine-verified by tools/derive_tables.py.",
        '"""',
        "",
        "",
        "def _vals(strs):",
        "    return tuple(float(s) for s in strs)",
        "",
        "",
        "def _rows(rows):",
        "    return tuple(tuple(float(s) for s in r) for r in rows)",
        "",
        "",
    ]
    lines.append(_fmt_vals("GAUSS1_NODES", [half]))
    lines.append(_fmt_vals("GAUSS2_NODES", [half - s3 / 6, half + s3 / 6]))
    lines.append(_fmt_vals("GAUSS3_NODES",
                           [half - s15 / 10, half, half + s15 / 10]))
    lines.append("")
    lines.append("CF2_A = ((1.0,),)")
    lines.append(_fmt_rows("CF4_A", cf4))
    lines.append(_fmt_rows("CF4AF_A", cf4af))
    lines.append(_fmt_rows("CF6AF_A", cf6af))
    lines.append("")
    lines.append("# Four-exponential modified sixth-order scheme: stages 2 and 3 run the")
    lines.append("# splitting over h/2 with the BBK_A2 weights (stage 3 reversed); stages")
    lines.append("# 1 and 4 are pointwise phases exp(-i*h*(Wbar + BBK_WTILDE_COEF*h^2*G))")
    lines.append("# with Wbar the BBK_A1-weighted potential (reversed for stage 4) and G")
    lines.append("# the squared gradient of the node-3-minus-node-1 potential difference.")
    lines.append(_fmt_vals("BBK_A1", bbk1))
    lines.append(_fmt_vals("BBK_A2", bbk2))
    wt = -mp.mpf(ysign) / 25920
    lines.append('BBK_WTILDE_COEF = float("'
                 + mp.nstr(wt, 41, strip_zeros=False) + '")')
    lines.append("")
    lines.append("STRANG_ALPHA = (0.5, 0.5)")
    lines.append("STRANG_BETA = (1.0, 0.0)")
    lines.append(_fmt_vals("RKN74_ALPHA", r74[0]))
    lines.append(_fmt_vals("RKN74_BETA", r74[1]))
    lines.append(_fmt_vals("RKN116_ALPHA", r116[0]))
    lines.append(_fmt_vals("RKN116_BETA", r116[1]))
    lines.append("")
    text = "\n".join(lines)
    os.makedirs(os.path.dirname(OUT_PATH), exist_ok=True)
    with open(OUT_PATH, "w") as fh:
        fh.write(text)
    print(f"== wrote {os.path.normpath(OUT_PATH)}")


def main():
    check_engine()
    cf4 = check_cf4()
    bbk1, bbk2, ysign = resolve_bbk()
    cf4af = derive_cfqm_table("cf4af", 3, 4, seeds=[
        [0.30, -0.06, 0.12, 0.40, 0.26],
        [0.35, 0.10, 0.05, 0.30, 0.40],
    ])
    cf6af = derive_cfqm_table("cf6af", 6, 6, seeds=[
        [0.216, -0.077, 0.021, -0.081, -0.179, 0.032, 0.365, 0.298, -0.031],
    ], n_random=30)
    r74 = derive_rkn74()
    r116 = derive_rkn116()

    def fl(rows):
        return [[float(v) for v in r] for r in rows]

    matrix_check_cfqm({"cf2": [[1.0]], "cf4": fl(cf4), "cf4af": fl(cf4af),
                       "cf6af": fl(cf6af),
                       "bbk": ([float(v) for v in bbk1],
                               [float(v) for v in bbk2])}, ysign)
    matrix_check_splittings(([0.5, 0.5], [1.0, 0.0]),
                            ([float(v) for v in r74[0]],
                             [float(v) for v in r74[1]]),
                            ([float(v) for v in r116[0]],
                             [float(v) for v in r116[1]]))
    emit(cf4, cf4af, cf6af, bbk1, bbk2, ysign, r74, r116)
    print("ALL TABLE DERIVATIONS OK")


if __name__ == "__main__":
    main()
