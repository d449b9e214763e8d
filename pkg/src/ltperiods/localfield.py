"""Finite extensions of Q_q with rational valuations and absolute precision.

A tower is stored in absolute form: an unramified ring Z_q = Z_p[t]/(m) and
one Eisenstein polynomial E over Z_q for the top uniformizer w.  An element is
p^{-s} * sum c[i*f + j] w^i t^j with integer digits c.  The individual
Eisenstein steps used to build the tower are kept for introspection.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .errors import NotIrreducible, PrecisionLoss, ZeroDivisor

INF = math.inf
DEFAULT_PREC = 40
_GUARD = 8

ValExp = Fraction


def vp_int(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of 0")
    if p == 2:
        return (n & -n).bit_length() - 1
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp(x, p: int):
    """p-adic valuation of an int or Fraction (INF for 0)."""
    x = Fraction(x)
    if x == 0:
        return INF
    num, den = x.numerator, x.denominator
    return (vp_int(num, p) if num % p == 0 else 0) - (vp_int(den, p) if den % p == 0 else 0)


def fmt_exp(v) -> str:
    if v == INF:
        return "inf"
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def parse_exp(s: str):
    s = s.strip()
    if s == "inf":
        return INF
    return Fraction(s)


# ---------------------------------------------------------------------------
# residue fields


class ResidueField:
    """F_q = F_p[t]/(m) with elements stored as tuples of length f."""

    def __init__(self, p: int, modulus: Sequence[int]):
        self.p = p
        self.m = tuple(c % p for c in modulus)
        self.f = len(self.m) - 1
        self.q = p ** self.f
        self.zero = (0,) * self.f
        self.one = (1,) + (0,) * (self.f - 1)

    def __repr__(self):
        return f"F_{self.q}"

    def add(self, a, b):
        p = self.p
        return tuple((x + y) % p for x, y in zip(a, b))

    def sub(self, a, b):
        p = self.p
        return tuple((x - y) % p for x, y in zip(a, b))

    def neg(self, a):
        p = self.p
        return tuple((-x) % p for x in a)

    def mul(self, a, b):
        p, f = self.p, self.f
        if f == 1:
            return ((a[0] * b[0]) % p,)
        r = [0] * (2 * f - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    r[i + j] += x * y
        m = self.m
        for k in range(2 * f - 2, f - 1, -1):
            c = r[k] % p
            if c:
                for j in range(f):
                    r[k - f + j] -= c * m[j]
        return tuple(x % p for x in r[:f])

    def pow(self, a, n: int):
        r = self.one
        while n:
            if n & 1:
                r = self.mul(r, a)
            a = self.mul(a, a)
            n >>= 1
        return r

    def inv(self, a):
        if not any(a):
            raise ZeroDivisionError("zero in residue field")
        return self.pow(a, self.q - 2)

    def is_zero(self, a) -> bool:
        return not any(a)

    def from_int(self, n: int):
        return ((n % self.p),) + (0,) * (self.f - 1)

    def elements(self) -> Iterable[tuple]:
        return itertools.product(range(self.p), repeat=self.f)

    def generator(self):
        """The class of t (a primitive element of F_q over F_p when f > 1)."""
        if self.f == 1:
            return self.one
        return (0, 1) + (0,) * (self.f - 2)

    # polynomials over F_q: lists of elements, low degree first

    def ptrim(self, P):
        P = list(P)
        while P and not any(P[-1]):
            P.pop()
        return P

    def pmul(self, A, B):
        if not A or not B:
            return []
        r = [self.zero] * (len(A) + len(B) - 1)
        for i, a in enumerate(A):
            if any(a):
                for j, b in enumerate(B):
                    r[i + j] = self.add(r[i + j], self.mul(a, b))
        return self.ptrim(r)

    def pdivmod(self, A, B):
        A = self.ptrim(A)
        B = self.ptrim(B)
        if not B:
            raise ZeroDivisionError("polynomial division by 0")
        inv_lead = self.inv(B[-1])
        Q = [self.zero] * max(len(A) - len(B) + 1, 0)
        A = list(A)
        while len(A) >= len(B):
            c = self.mul(A[-1], inv_lead)
            k = len(A) - len(B)
            Q[k] = c
            for j, b in enumerate(B):
                A[k + j] = self.sub(A[k + j], self.mul(c, b))
            A = self.ptrim(A[:-1]) if not any(A[-1]) else A
            A = self.ptrim(A)
        return self.ptrim(Q), A

    def pgcd(self, A, B):
        A, B = self.ptrim(A), self.ptrim(B)
        while B:
            A, B = B, self.pdivmod(A, B)[1]
        if A:
            c = self.inv(A[-1])
            A = [self.mul(c, a) for a in A]
        return A

    def ppowmod(self, A, n: int, M):
        r = [self.one]
        A = self.pdivmod(A, M)[1]
        while n:
            if n & 1:
                r = self.pdivmod(self.pmul(r, A), M)[1]
            A = self.pdivmod(self.pmul(A, A), M)[1]
            n >>= 1
        return r

    def peval(self, A, x):
        r = self.zero
        for a in reversed(A):
            r = self.add(self.mul(r, x), a)
        return r

    def proots(self, A) -> dict:
        """Roots in F_q with multiplicities (brute force over the field)."""
        A = self.ptrim(A)
        out = {}
        for x in self.elements():
            k = 0
            B = A
            while len(B) > 1 and not any(self.peval(B, x)):
                B = self.pdivmod(B, [self.neg(x), self.one])[0]
                k += 1
            if k:
                out[x] = k
        return out

    def min_root_degree(self, A) -> int:
        """Smallest k such that A has a root in F_{q^k}."""
        A = self.ptrim(A)
        if len(A) <= 1:
            raise ValueError("constant polynomial has no roots")
        X = [self.zero, self.one]
        h = X
        for k in range(1, len(A)):
            h = self.ppowmod(h, self.q, A)
            d = self.ptrim([self.sub(a, b) for a, b in itertools.zip_longest(
                h, X, fillvalue=self.zero)])
            g = self.pgcd(A, d) if d else A
            if len(g) > 1:
                return k
        return len(A) - 1


def irreducible_modulus(p: int, f: int) -> tuple:
    """First monic irreducible polynomial of degree f over F_p (lexicographic)."""
    if f == 1:
        return (0, 1)
    Fp = ResidueField(p, (0, 1))
    for tail in itertools.product(range(p), repeat=f):
        if tail[0] == 0:
            continue
        P = [(c,) for c in tail] + [(1,)]
        X = [(0,), (1,)]
        h = X
        ok = True
        for _ in range(1, f // 2 + 1):
            h = Fp.ppowmod(h, p, P)
            d = Fp.ptrim([Fp.sub(a, b) for a, b in itertools.zip_longest(h, X, fillvalue=(0,))])
            if len(Fp.pgcd(P, d)) > 1:
                ok = False
                break
        if ok:
            return tuple(tail) + (1,)
    raise RuntimeError("no irreducible polynomial found")


# ---------------------------------------------------------------------------
# unramified ring helpers on integer tuples


def _qmul(a, b, m, f):
    if f == 1:
        return (a[0] * b[0],)
    r = [0] * (2 * f - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                r[i + j] += x * y
    for k in range(2 * f - 2, f - 1, -1):
        c = r[k]
        if c:
            for j in range(f):
                r[k - f + j] -= c * m[j]
    return tuple(r[:f])


def _qadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _qsub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _qmod(a, M):
    return tuple(x % M for x in a)


def _qvp(a, p):
    nz = [x for x in a if x]
    if not nz:
        return INF
    return vp_int(math.gcd(*nz), p)


def _qinv_unit(a, m, f, p, N):
    """Inverse of a unit of Z_q modulo p^N (Newton from the residue inverse)."""
    F = ResidueField(p, m)
    r = F.inv(tuple(x % p for x in a))
    y = r
    M = p ** N
    prec = 1
    two = (2,) + (0,) * (f - 1)
    while prec < N:
        prec *= 2
        y = _qmod(_qmul(y, _qsub(two, _qmod(_qmul(a, y, m, f), M)), m, f), M)
    return y


def _berkowitz(Mx, n, m, f, M):
    """Characteristic polynomial (monic, low degree first) of an n x n matrix
    over Z_q / M, division free.  Mx[r][c] are f-tuples."""
    zero = (0,) * f
    one = (1,) + (0,) * (f - 1)
    # Vect holds the charpoly of the leading principal submatrix, high degree first
    vect = [one, _qmod(tuple(-x for x in Mx[0][0]), M)]
    for r in range(1, n):
        R = [Mx[r][c] for c in range(r)]          # row r, columns < r
        C = [Mx[c][r] for c in range(r)]          # column r, rows < r
        A = [[Mx[i][j] for j in range(r)] for i in range(r)]
        a_rr = Mx[r][r]
        # Toeplitz column: 1, -a_rr, -R C, -R A C, ...
        col = [one, _qmod(tuple(-x for x in a_rr), M)]
        vecC = C
        for _k in range(r):
            s = zero
            for x, y in zip(R, vecC):
                s = _qadd(s, _qmul(x, y, m, f))
            col.append(_qmod(tuple(-x for x in s), M))
            nxt = []
            for i in range(r):
                t = zero
                for j in range(r):
                    if any(A[i][j]) and any(vecC[j]):
                        t = _qadd(t, _qmul(A[i][j], vecC[j], m, f))
                nxt.append(_qmod(t, M))
            vecC = nxt
        new = []
        for i in range(r + 2):
            t = zero
            for j in range(len(vect)):
                k = i - j
                if 0 <= k < len(col):
                    t = _qadd(t, _qmul(col[k], vect[j], m, f))
            new.append(_qmod(t, M))
        vect = new
    return list(reversed(vect))


# ---------------------------------------------------------------------------
# towers


class FieldTower:
    """Q_q followed by a chain of Eisenstein steps, stored in absolute form.

    Use `FieldTower.base`, `adjoin_root`, `extend_unramified` to build towers.
    """

    def __init__(self, p: int, m: tuple, E, cap, steps=(), parent=None,
                 embed: Callable | None = None, generator_raw=None):
        self.p = p
        self.m = tuple(m)
        self.f = len(self.m) - 1
        self.q = p ** self.f
        self.E = E                      # None when e == 1, else list of f-tuples, monic
        self.e = 1 if E is None else len(E) - 1
        self.n = self.e * self.f
        self.cap = Fraction(cap)
        self.N = math.ceil(self.cap) + _GUARD
        self.steps = tuple(steps)
        self.parent = parent
        self._embed = embed
        self.residue_field = ResidueField(p, self.m)
        self._pp = {}
        if E is not None:
            self._Eint = [c[0] for c in E] if self.f == 1 else None
        h = hashlib.sha1(repr((p, self.m, None if E is None else
                               [tuple(x % p ** 12 for x in c) for c in E])).encode()).hexdigest()
        self.name = f"Q{p}(f={self.f},e={self.e})#{h[:8]}"
        self.generator = None if generator_raw is None else self._mk(list(generator_raw[0]),
                                                                    generator_raw[1], self.cap)
        self._unif_inv = None

    # construction ---------------------------------------------------------

    @classmethod
    def base(cls, p: int, f: int = 1, prec=DEFAULT_PREC) -> "FieldTower":
        return cls(p, irreducible_modulus(p, f), None, prec)

    def __repr__(self):
        return f"FieldTower(p={self.p}, f={self.f}, e={self.e}, cap={self.cap})"

    @property
    def ramified_steps(self):
        return self.steps

    def ppow(self, k: int) -> int:
        r = self._pp.get(k)
        if r is None:
            r = self.p ** k
            self._pp[k] = r
        return r

    # raw arithmetic ---------------------------------------------------------

    def _raw_mul(self, a, b):
        e, f = self.e, self.f
        if f == 1:
            if e == 1:
                return [a[0] * b[0]]
            prod = [0] * (2 * e - 1)
            for i, x in enumerate(a):
                if x:
                    for j, y in enumerate(b):
                        if y:
                            prod[i + j] += x * y
            R = self._Eint
            for k in range(2 * e - 2, e - 1, -1):
                c = prod[k]
                if c:
                    base = k - e
                    for j in range(e):
                        if R[j]:
                            prod[base + j] -= c * R[j]
            return prod[:e]
        m = self.m
        A = [tuple(a[i * f:(i + 1) * f]) for i in range(e)]
        B = [tuple(b[i * f:(i + 1) * f]) for i in range(e)]
        zero = (0,) * f
        prod = [zero] * (2 * e - 1)
        for i, x in enumerate(A):
            if any(x):
                for j, y in enumerate(B):
                    if any(y):
                        prod[i + j] = _qadd(prod[i + j], _qmul(x, y, m, f))
        if e > 1:
            E = self.E
            for k in range(2 * e - 2, e - 1, -1):
                c = prod[k]
                if any(c):
                    for j in range(e):
                        if any(E[j]):
                            prod[k - e + j] = _qsub(prod[k - e + j], _qmul(c, E[j], m, f))
        out = []
        for i in range(e):
            out.extend(prod[i])
        return out

    def _mk(self, c, s: int, prec) -> "PadicElem":
        if type(prec) is float:
            if not any(c):
                return PadicElem(self, [0] * self.n, 0, INF)
            prec = self.cap
        elif prec > self.cap:
            prec = self.cap
        k = math.ceil(prec) + s
        if k <= 0:
            return PadicElem(self, [0] * self.n, 0, prec)
        M = self.ppow(k)
        c = [x % M for x in c]
        nz = [x for x in c if x]
        if not nz:
            return PadicElem(self, [0] * self.n, 0, prec)
        g = math.gcd(*nz)
        if g % self.p == 0:
            t = vp_int(g, self.p)
            d = self.ppow(t)
            c = [x // d for x in c]
            s -= t
        return PadicElem(self, c, s, prec)

    # element constructors ---------------------------------------------------

    def zero(self) -> "PadicElem":
        return PadicElem(self, [0] * self.n, 0, INF)

    def one(self) -> "PadicElem":
        return self.from_rational(1)

    def from_rational(self, x, prec=None) -> "PadicElem":
        x = Fraction(x)
        if x == 0:
            return self.zero() if prec is None else self._mk([0] * self.n, 0, prec)
        prec = self.cap if prec is None else prec
        num, den = x.numerator, x.denominator
        k = 0
        while den % self.p == 0:
            den //= self.p
            k += 1
        M = self.ppow(self.N + k + 2)
        c = [0] * self.n
        c[0] = num * pow(den, -1, M) % M
        return self._mk(c, k, prec)

    def from_unramified(self, coeffs: Sequence[int], s: int = 0, prec=None) -> "PadicElem":
        """Element sum coeffs[j] t^j / p^s of the unramified subring."""
        c = [0] * self.n
        for j, a in enumerate(coeffs):
            c[j] = a
        return self._mk(c, s, self.cap if prec is None else prec)

    def coerce(self, x) -> "PadicElem":
        """Bring an int, Fraction or element of an ancestor tower into this tower."""
        if isinstance(x, PadicElem):
            if x.T is self:
                return x
            chain = []
            T = self
            while T is not None and T is not x.T:
                chain.append(T)
                T = T.parent
            if T is None:
                raise ValueError("element does not live in an ancestor tower")
            for T in reversed(chain):
                x = T._embed(x)
            return x
        return self.from_rational(x)

    def uniformizer(self) -> "PadicElem":
        if self.e == 1:
            return self.from_rational(self.p)
        c = [0] * self.n
        c[self.f] = 1
        return self._mk(c, 0, self.cap)

    def unramified_generator(self) -> "PadicElem":
        c = [0] * self.n
        if self.f == 1:
            c[0] = 1
        else:
            c[1] = 1
        return self._mk(c, 0, self.cap)

    def _uniformizer_inverse(self) -> "PadicElem":
        if self._unif_inv is None:
            if self.e == 1:
                self._unif_inv = self.from_rational(Fraction(1, self.p))
            else:
                f, e, p = self.f, self.e, self.p
                E = self.E
                w = tuple(x // p for x in E[0])
                winv = _qinv_unit(w, self.m, f, p, self.N + 2)
                # p/w_unif = -(w^{e-1} + E_{e-1} w^{e-2} + ... + E_1) / (E_0/p)
                c = [0] * self.n
                for i in range(e):
                    coef = E[i + 1]
                    t = _qmul(coef, winv, self.m, f)
                    for j in range(f):
                        c[i * f + j] = -t[j]
                self._unif_inv = self._mk(c, 1, self.cap)
        return self._unif_inv

    def teichmuller(self, residue) -> "PadicElem":
        return teichmuller(self, residue)

    def lift_residue(self, r) -> "PadicElem":
        return self.from_unramified(list(r))

    def random_element(self, rng, val_min=0, digits=None) -> "PadicElem":
        """Random element with valuation >= val_min (for property tests)."""
        digits = digits if digits is not None else math.ceil(self.cap)
        c = [rng.randrange(self.ppow(digits)) for _ in range(self.n)]
        k = math.ceil(Fraction(val_min))
        x = self._mk(c, 0, self.cap)
        if k:
            x = x * self.from_rational(Fraction(self.p) ** k)
        return x

    # tower building ----------------------------------------------------------

    def adjoin_eisenstein(self, poly: Sequence["PadicElem"]) -> "FieldTower":
        poly = [self.coerce(a) for a in poly]
        if not is_eisenstein(poly, self):
            raise NotIrreducible("polynomial is not Eisenstein over this tower")
        e1, f, p = self.e, self.f, self.p
        e2 = len(poly) - 1
        n = e1 * e2
        N = self.N + 4
        M = p ** N
        m = self.m
        zero = (0,) * f

        def coords(x: PadicElem):
            # integral coordinates over Z_q in the basis w1^i
            if x.s >= 0:
                d = self.ppow(x.s)
                raw = [v // d if v % d == 0 else None for v in x.c]
                if any(r is None for r in raw):
                    raise ValueError("non-integral coefficient")
            else:
                d = self.ppow(-x.s)
                raw = [v * d for v in x.c]
            return [tuple(raw[i * f:(i + 1) * f]) for i in range(e1)]

        w1 = self.uniformizer()
        w1pow = [self.one()]
        for _ in range(e1):
            w1pow.append(w1pow[-1] * w1)
        # matrix of multiplication by y on basis b(i, j) = w1^i y^j, index j*e1 + i
        cols = []
        for j in range(e2):
            for i in range(e1):
                v = [zero] * n
                if j < e2 - 1:
                    v[(j + 1) * e1 + i] = (1,) + (0,) * (f - 1)
                else:
                    for k in range(e2):
                        cc = coords(-(poly[k] * w1pow[i]))
                        for i2 in range(e1):
                            v[k * e1 + i2] = _qmod(cc[i2], M)
                cols.append(v)
        Mx = [[cols[c][r] for c in range(n)] for r in range(n)]
        E_new = _berkowitz(Mx, n, m, f, M)
        E_new = [_qmod(c, M) for c in E_new]
        if _qvp(E_new[0], p) != 1 or any(_qvp(c, p) < 1 for c in E_new[1:n]):
            raise NotIrreducible("composite uniformizer polynomial is not Eisenstein")
        # express w1 in the basis y^k: solve sum c_k (M^k e0) = coords(w1)
        if e1 > 1:
            vecs = []
            v = [zero] * n
            v[0] = (1,) + (0,) * (f - 1)
            for _k in range(n):
                vecs.append(v)
                nv = [zero] * n
                for c_idx, comp in enumerate(v):
                    if any(comp):
                        for r_idx in range(n):
                            if any(cols[c_idx][r_idx]):
                                nv[r_idx] = _qadd(nv[r_idx], _qmul(comp, cols[c_idx][r_idx], m, f))
                v = [_qmod(x, M) for x in nv]
            target = [zero] * n
            target[1] = (1,) + (0,) * (f - 1)
            sol = _solve_unimodular(vecs, target, n, m, f, p, N)
        else:
            sol = None
        name_parent = self

        T2 = FieldTower(p, m, E_new, self.cap, steps=self.steps + (tuple(poly),), parent=self)
        if sol is not None:
            w1_img = T2._mk([x for t in sol for x in t], 0, T2.cap)
        else:
            w1_img = None

        def embed(x: PadicElem, T2=T2, w1_img=w1_img, src=name_parent):
            if src.e == 1:
                c = list(x.c) + [0] * (T2.n - len(x.c))
                return T2._mk(c, x.s, x.prec)
            # Horner in w1_img with unramified coefficients
            acc = T2.zero()
            for i in reversed(range(src.e)):
                blk = x.c[i * src.f:(i + 1) * src.f]
                acc = acc * w1_img + T2.from_unramified(blk, 0, INF if not any(blk) else T2.cap)
            out = T2._mk(acc.c, acc.s + x.s, x.prec)
            return out

        T2._embed = embed
        g = [0] * T2.n
        g[T2.f] = 1
        T2.generator = T2._mk(g, 0, T2.cap)
        return T2

    def extend_unramified(self, d: int) -> "FieldTower":
        """Tower with residue degree multiplied by d; old elements embed via a
        Hensel-lifted root of the old unramified modulus."""
        if d == 1:
            return self
        p, f = self.p, self.f
        f2 = f * d
        m2 = irreducible_modulus(p, f2)
        F2 = ResidueField(p, m2)
        N = self.N + 4
        M = p ** N
        # root of the old modulus in F_{q^d}
        old = [F2.from_int(c) for c in self.m]
        r = None
        for x in F2.elements():
            if not any(F2.peval(old, x)):
                r = x
                break
        if r is None:
            raise RuntimeError("no embedding of residue fields")
        t = tuple(r)
        dm = [k * self.m[k] for k in range(1, f + 1)]
        for _ in range(N.bit_length() + 2):
            val = (0,) * f2
            for a in reversed(self.m):
                val = _qmod(_qadd(_qmul(val, t, m2, f2), (a,) + (0,) * (f2 - 1)), M)
            der = (0,) * f2
            for a in reversed(dm):
                der = _qmod(_qadd(_qmul(der, t, m2, f2), (a,) + (0,) * (f2 - 1)), M)
            t = _qmod(_qsub(t, _qmul(val, _qinv_unit(der, m2, f2, p, N), m2, f2)), M)
        tpows = [(1,) + (0,) * (f2 - 1)]
        for _ in range(f):
            tpows.append(_qmod(_qmul(tpows[-1], t, m2, f2), M))

        def mapq(a):
            acc = (0,) * f2
            for j, x in enumerate(a):
                if x:
                    acc = _qadd(acc, tuple(x * y for y in tpows[j]))
            return acc

        E2 = None if self.E is None else [_qmod(mapq(c), M) for c in self.E]
        T2 = FieldTower(p, m2, E2, self.cap, steps=(), parent=self)
        src = self

        def embed(x: PadicElem, T2=T2, src=src):
            c = []
            for i in range(src.e):
                c.extend(mapq(x.c[i * src.f:(i + 1) * src.f]))
            return T2._mk(c, x.s, x.prec)

        T2._embed = embed
        T2.steps = tuple(tuple(T2.coerce(a) for a in poly) for poly in self.steps)
        T2.generator = None if self.generator is None else T2.coerce(self.generator)
        return T2


def _solve_unimodular(vecs, target, n, m, f, p, N):
    """Solve sum_k x_k vecs[k] = target over Z_q / p^N (the matrix is invertible mod p)."""
    M = p ** N
    A = [[vecs[c][r] for c in range(n)] + [target[r]] for r in range(n)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if _qvp(tuple(x % M for x in A[r][col]), p) == 0:
                piv = r
                break
        if piv is None:
            raise ArithmeticError("change of basis is not unimodular")
        A[col], A[piv] = A[piv], A[col]
        inv = _qinv_unit(A[col][col], m, f, p, N)
        A[col] = [_qmod(_qmul(x, inv, m, f), M) for x in A[col]]
        for r in range(n):
            if r != col and any(x % M for x in A[r][col]):
                c = A[r][col]
                A[r] = [_qmod(_qsub(x, _qmul(c, y, m, f)), M) for x, y in zip(A[r], A[col])]
    return [A[r][n] for r in range(n)]


# ---------------------------------------------------------------------------
# elements


class PadicElem:
    """Immutable element of a FieldTower known modulo valuation >= prec."""

    __slots__ = ("T", "c", "s", "prec", "_v")

    def __init__(self, T: FieldTower, c, s: int, prec):
        self.T = T
        self.c = c
        self.s = s
        self.prec = prec
        self._v = None

    # valuation ---------------------------------------------------------------

    def _raw_val(self):
        if self._v is None:
            T = self.T
            best = None
            f, e, p = T.f, T.e, T.p
            # valuations in ticks of 1/e
            for k, x in enumerate(self.c):
                if x:
                    t = e * vp_int(x, p) + k // f
                    if best is None or t < best:
                        best = t
            if best is None:
                self._v = INF
            else:
                v = Fraction(best - e * self.s, e)
                prec = self.prec
                self._v = INF if type(prec) is not float and v >= prec else v
        return self._v

    def valuation(self, strict: bool = False):
        """Exact valuation, or INF when indistinguishable from 0.

        With strict=True an inexact zero raises PrecisionLoss instead."""
        v = self._raw_val()
        if type(v) is float and strict and type(self.prec) is not float:
            raise PrecisionLoss(f"element is 0 modulo valuation {self.prec}")
        return v

    def vbound(self):
        """Lower bound for the true valuation."""
        v = self._raw_val()
        return self.prec if type(v) is float else v

    def is_zero(self) -> bool:
        return type(self._raw_val()) is float

    def residue(self):
        if self.vbound() < 0:
            raise ValueError("residue of a non-integral element")
        T = self.T
        p = T.p
        if self.is_zero():
            return T.residue_field.zero
        if self.s > 0:
            d = T.ppow(self.s)
            return tuple((x // d) % p for x in self.c[:T.f])
        if self.s < 0:
            return T.residue_field.zero
        return tuple(x % p for x in self.c[:T.f])

    def with_prec(self, prec) -> "PadicElem":
        if prec >= self.prec:
            return self
        return self.T._mk(self.c, self.s, prec)

    # arithmetic --------------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, PadicElem):
            if other == 0:
                return self
            return self + self.T.from_rational(other, self.prec if self.prec != INF else None)
        if other.T is not self.T:
            a, b = _common(self, other)
            return a + b
        T = self.T
        sa, sb = self.s, other.s
        if sa == sb:
            c = [x + y for x, y in zip(self.c, other.c)]
            s = sa
        elif sa > sb:
            d = T.ppow(sa - sb)
            c = [x + y * d for x, y in zip(self.c, other.c)]
            s = sa
        else:
            d = T.ppow(sb - sa)
            c = [x * d + y for x, y in zip(self.c, other.c)]
            s = sb
        return T._mk(c, s, min(self.prec, other.prec))

    __radd__ = __add__

    def __neg__(self):
        return PadicElem(self.T, [-x for x in self.c], self.s, self.prec)

    def __sub__(self, other):
        if not isinstance(other, PadicElem):
            return self + (-Fraction(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PadicElem):
            return self.scale(other)
        if other.T is not self.T:
            a, b = _common(self, other)
            return a * b
        T = self.T
        if type(self.prec) is float and not any(self.c):
            return self
        if type(other.prec) is float and not any(other.c):
            return other
        prec = min(self.prec + other.vbound(), other.prec + self.vbound())
        return T._mk(T._raw_mul(self.c, other.c), self.s + other.s, prec)

    __rmul__ = __mul__

    def scale(self, x) -> "PadicElem":
        """Multiply by an exact rational (keeps relative precision)."""
        x = Fraction(x)
        if x == 0:
            return self.T.zero()
        T = self.T
        p = T.p
        num, den = x.numerator, x.denominator
        k = 0
        while num % p == 0:
            num //= p
            k += 1
        while den % p == 0:
            den //= p
            k -= 1
        prec = self.prec + k
        if den == 1:
            return T._mk([a * num for a in self.c], self.s - k, prec)
        M = T.ppow(max(math.ceil(min(prec, T.cap)) + self.s - k + 2, 1) + _GUARD)
        u = num * pow(den, -1, M)
        return T._mk([a * u for a in self.c], self.s - k, prec)

    def inverse(self) -> "PadicElem":
        T = self.T
        v = self.valuation(strict=True)
        if v == INF:
            raise ZeroDivisionError("inverse of exact zero")
        # v = k + i/e with 0 <= i < e
        i = (v * T.e) % T.e
        i = int(i)
        k = int(v - Fraction(i, T.e))
        winv = T._uniformizer_inverse()
        z = self
        if i:
            z = z * winv ** i
        if k:
            z = z.scale(Fraction(T.p) ** (-k))
        # z is a unit: Newton from the residue inverse
        r = T.residue_field.inv(z.residue())
        y = T.from_unramified(list(r))
        z = z.with_prec(T.cap) if z.prec > T.cap else z
        acc = Fraction(1, T.e)
        two = T.from_rational(2)
        while acc < T.cap + 1:
            y = y * (two - z * y)
            acc *= 2
        if i:
            y = y * winv ** i
        if k:
            y = y.scale(Fraction(T.p) ** (-k))
        rel = self.prec - v
        return T._mk(y.c, y.s, min(rel - v, y.prec))

    def __truediv__(self, other):
        if not isinstance(other, PadicElem):
            return self.scale(1 / Fraction(other))
        if other.T is not self.T:
            a, b = _common(self, other)
            return a / b
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        r = self.T.one()
        a = self
        while n:
            if n & 1:
                r = r * a
            n >>= 1
            if n:
                a = a * a
        return r

    def __eq__(self, other):
        d = self - other
        return d.is_zero()

    __hash__ = None

    def __repr__(self):
        v = self.valuation()
        return f"<PadicElem v={fmt_exp(v)} prec={fmt_exp(self.prec)} in {self.T.name}>"

    def to_json(self) -> dict:
        p = self.T.p
        return {
            "tower": self.T.name,
            "digits": [_to_base(x % self.T.ppow(max(math.ceil(self.prec) + self.s, 1)), p)
                       for x in self.c] if self.prec != INF else ["0"] * len(self.c),
            "shift": self.s,
            "precision": fmt_exp(self.prec),
        }


def _to_base(n: int, p: int) -> str:
    if n == 0:
        return "0"
    ds = []
    while n:
        n, r = divmod(n, p)
        ds.append("0123456789abcdefghijklmnopqrstuvwxyz"[r] if p <= 36 else f"[{r}]")
    return "".join(reversed(ds))


def _common(a: PadicElem, b: PadicElem):
    try:
        return a, a.T.coerce(b)
    except ValueError:
        return b.T.coerce(a), b


# ---------------------------------------------------------------------------
# operations


def valuation(x) -> Fraction:
    if isinstance(x, PadicElem):
        return x.valuation()
    raise TypeError("valuation expects a PadicElem")


def teichmuller(T: FieldTower, residue) -> PadicElem:
    """Multiplicative lift of a residue class via iterated q-power maps."""
    r = tuple(residue)
    if not any(r):
        return T.zero()
    if r == T.residue_field.one:
        return T.one()
    x = T.from_unramified(list(r))
    for _ in range(math.ceil(T.cap) + 2):
        x = x ** T.q
    return x


def is_eisenstein(poly: Sequence[PadicElem], T: FieldTower) -> bool:
    if len(poly) < 2 or not (poly[-1] - 1).is_zero():
        return False
    try:
        v0 = poly[0].valuation(strict=True)
    except PrecisionLoss:
        return False
    if v0 != Fraction(1, T.e):
        return False
    for a in poly[1:-1]:
        if a.vbound() < Fraction(1, T.e):
            return False
    return True


def adjoin_root(T: FieldTower, poly: Sequence) -> FieldTower:
    """Adjoin a root of an Eisenstein or residually irreducible monic polynomial.

    The new tower exposes the adjoined root as `generator`."""
    poly = [T.coerce(a) for a in poly]
    if is_eisenstein(poly, T):
        return T.adjoin_eisenstein(poly)
    if all(a.vbound() >= 0 for a in poly) and (poly[-1] - 1).is_zero():
        F = T.residue_field
        red = [a.residue() for a in poly]
        d = len(poly) - 1
        if d >= 1 and F.min_root_degree(red) == d:
            T2 = T.extend_unramified(d)
            poly2 = [T2.coerce(a) for a in poly]
            F2 = T2.residue_field
            red2 = [a.residue() for a in poly2]
            r = next(iter(F2.proots(red2)))
            root = hensel_root(poly2, T2.from_unramified(list(r)))
            T2.generator = root
            return T2
    raise NotIrreducible("neither Eisenstein nor residually irreducible")


# ---------------------------------------------------------------------------
# polynomials over a tower (lists of PadicElem, low degree first)


def poly_eval(P: Sequence[PadicElem], x: PadicElem) -> PadicElem:
    acc = None
    for a in reversed(P):
        acc = a if acc is None else acc * x + a
    return acc if acc is not None else x.T.zero()


def poly_deriv(P):
    return [P[k].scale(k) for k in range(1, len(P))]


def poly_mul(A, B):
    if not A or not B:
        return []
    out = [None] * (len(A) + len(B) - 1)
    for i, a in enumerate(A):
        if a.is_zero() and a.prec == INF:
            continue
        for j, b in enumerate(B):
            t = a * b
            out[i + j] = t if out[i + j] is None else out[i + j] + t
    T = (A[0]).T
    return [T.zero() if x is None else x for x in out]


def poly_add(A, B):
    n = max(len(A), len(B))
    T = (A or B)[0].T
    z = T.zero()
    return [(A[i] if i < len(A) else z) + (B[i] if i < len(B) else z) for i in range(n)]


def poly_sub(A, B):
    return poly_add(A, [-b for b in B])


def poly_divmod(A, B):
    """Division by a polynomial whose leading coefficient is certified nonzero."""
    A = list(A)
    lead_inv = B[-1].inverse()
    dB = len(B) - 1
    if len(A) <= dB:
        return [], A
    Q = [None] * (len(A) - dB)
    for k in range(len(A) - 1 - dB, -1, -1):
        c = A[k + dB] * lead_inv
        Q[k] = c
        for j in range(dB + 1):
            A[k + j] = A[k + j] - c * B[j]
    return Q, A[:dB]


def poly_taylor_shift(P, c: PadicElem):
    """Coefficients of P(c + t) in t (Horner re-expansion)."""
    out = []
    for a in reversed(P):
        # out := out * (c + t) + a
        new = [None] * (len(out) + 1)
        for k, b in enumerate(out):
            t = b * c
            new[k] = t if new[k] is None else new[k] + t
            new[k + 1] = b if new[k + 1] is None else new[k + 1] + b
        new[0] = a if new[0] is None else new[0] + a
        out = [x if x is not None else c.T.zero() for x in new]
    return out


def hensel_root(P, x0: PadicElem, max_iter: int = 200) -> PadicElem:
    """Newton iteration for a simple root starting from x0."""
    T = x0.T
    D = poly_deriv(P)
    x = x0
    for _ in range(max_iter):
        val = poly_eval(P, x)
        if val.is_zero():
            return x
        d = poly_eval(D, x)
        step = val / d
        x = x - step
        if step.is_zero():
            return x
    if poly_eval(P, x).vbound() >= T.cap - 2:
        return x
    raise PrecisionLoss("Newton iteration did not converge")


class EtaleQuotient:
    """The ring L[x]/(W) for a monic W, with zero-divisor detection on inversion."""

    def __init__(self, base: FieldTower, W: Sequence[PadicElem]):
        self.base = base
        self.W = [base.coerce(a) for a in W]
        self.d = len(self.W) - 1
        if not (self.W[-1] - 1).is_zero():
            raise ValueError("modulus must be monic")

    def reduce(self, A):
        A = [self.base.coerce(a) for a in A]
        if len(A) <= self.d:
            return A + [self.base.zero()] * (self.d - len(A))
        return poly_divmod(A, self.W)[1]

    def gen(self):
        return self.reduce([self.base.zero(), self.base.one()])

    def mul(self, a, b):
        return self.reduce(poly_mul(a, b))

    def add(self, a, b):
        return [x + y for x, y in zip(a, b)]

    def inverse(self, a):
        """Inverse via extended Euclid; ZeroDivisor carries gcd(a, W) when nontrivial."""
        r0, r1 = list(self.W), _strip(list(a))
        s0, s1 = [self.base.zero()], [self.base.one()]
        while len(r1) > 1:
            q, r = poly_divmod(r0, r1)
            r0, r1 = r1, _strip(r)
            s0, s1 = s1, poly_sub(s0, poly_mul(q, s1))
        if not r1:
            g = [c * r0[-1].inverse() for c in r0]
            raise ZeroDivisor("zero divisor in etale quotient", factor=g)
        inv = r1[0].inverse()
        return self.reduce([c * inv for c in s1])


def _strip(A):
    while A and A[-1].is_zero():
        A.pop()
    return A
