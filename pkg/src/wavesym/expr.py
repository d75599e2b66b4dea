"""Exact symbolic expression trees.

Expressions are immutable values built from arbitrary-precision rationals,
named parameters, coordinate variables, jet coordinates of the dependent
variable u, opaque function symbols, and the node kinds Sum / Product /
Power / exp / ln.  Every public constructor returns a normalized tree, so
structural equality doubles as the engine's notion of syntactic identity.

The normal form is deliberately conservative:

* sums and products are flattened and sorted in a fixed total order,
  rational constants are folded, like terms and like power-bases merge;
* ``exp(a)*exp(b)`` merges to ``exp(a+b)``; rational multiples of ``ln``
  inside an exp argument are pulled out as powers (``exp(w + 2*ln(x))``
  becomes ``x^2*exp(w)``); ``exp(ln(e))`` and ``ln(exp(e))`` collapse;
* ``ln`` of a product is never split into a sum of logs, except that
  exp factors are extracted (``ln(a*exp(b)) -> ln(a) + b``), which is
  safe wherever the left side is defined;
* products are not distributed over sums -- :func:`expand` does that on
  demand.

No floating point number ever enters a tree; all numeric content is
`fractions.Fraction`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable, Mapping

__all__ = [
    "Expr", "Rat", "Param", "Base", "Jet", "Fn", "Pow", "Exp", "Ln",
    "Product", "Sum", "MonomialKey",
    "rat", "param", "base", "jet", "fn",
    "add", "mul", "pow_", "exp_", "ln_", "neg", "sub", "div",
    "normalize", "expand", "diff", "substitute", "collect", "collect_atoms",
    "clear_sum_denominators", "vanishes",
    "eval_numeric", "equal_numeric", "random_point", "default_fn_sampler",
    "format_expr", "atoms_of", "jets_of", "fn_nodes_of", "max_jet_order",
    "contains", "rational_content",
    "RAT0", "RAT1", "X", "Y", "T", "U",
    "ExprError", "SingularError", "NonPolynomialError",
    "UnboundAtomError", "EvalDomainError",
]

_COORD_RANK = {"x": 0, "y": 1, "t": 2}


class ExprError(Exception):
    pass


class SingularError(ExprError):
    """Raised when simplification meets 0 raised to a negative power or ln(0)."""


class NonPolynomialError(ExprError):
    """Raised by collect() when a target variable occurs non-polynomially."""


class UnboundAtomError(ExprError):
    pass


class EvalDomainError(ExprError):
    """Numeric evaluation hit a domain error (ln of non-positive, 0^negative...)."""


class Expr:
    __slots__ = ("_hash", "_key")
    kind = -1

    def __hash__(self):
        return self._hash

    def sort_key(self):
        return self._key

    def __str__(self):
        return format_expr(self)

    def __repr__(self):
        return f"<{type(self).__name__} {format_expr(self)}>"

    # convenience operators; all routed through the normalizing constructors
    def __add__(self, other):
        return add(self, _as_expr(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, _as_expr(other))

    def __rsub__(self, other):
        return sub(_as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        return div(self, _as_expr(other))

    def __rtruediv__(self, other):
        return div(_as_expr(other), self)

    def __pow__(self, q):
        return pow_(self, Fraction(q))


def _as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return rat(v)
    raise TypeError(f"cannot coerce {v!r} to Expr")


class Rat(Expr):
    __slots__ = ("value",)
    kind = 0

    def __init__(self, value: Fraction):
        self.value = value
        self._hash = hash((0, value))
        self._key = (0, value)

    def __eq__(self, other):
        return self is other or (type(other) is Rat and other.value == self.value)

    __hash__ = Expr.__hash__


class Param(Expr):
    __slots__ = ("name",)
    kind = 1

    def __init__(self, name: str):
        self.name = name
        self._hash = hash((1, name))
        self._key = (1, name)

    def __eq__(self, other):
        return self is other or (type(other) is Param and other.name == self.name)

    __hash__ = Expr.__hash__


class Base(Expr):
    """A coordinate variable.  x, y, t are the model coordinates; reductions
    introduce further ones (r, s, p, q) for the invariant coordinates."""

    __slots__ = ("name",)
    kind = 2

    def __init__(self, name: str):
        self.name = name
        self._hash = hash((2, name))
        self._key = (2, _COORD_RANK.get(name, 3), name)

    def __eq__(self, other):
        return self is other or (type(other) is Base and other.name == self.name)

    __hash__ = Expr.__hash__


MAX_JET_ORDER = 4


class Jet(Expr):
    """u differentiated by the multiset of coordinate letters in ``idx``.

    ``idx`` is stored sorted (x before y before t), so u_xy and u_yx are the
    same node.  Total order is capped at 4."""

    __slots__ = ("idx",)
    kind = 3

    def __init__(self, idx: tuple):
        self.idx = idx
        self._hash = hash((3, idx))
        self._key = (3, len(idx), tuple(_COORD_RANK[c] for c in idx))

    def __eq__(self, other):
        return self is other or (type(other) is Jet and other.idx == self.idx)

    __hash__ = Expr.__hash__

    @property
    def order(self):
        return len(self.idx)


class Fn(Expr):
    """Opaque function symbol applied to argument expressions.

    ``didx`` counts partial derivatives taken in each argument slot; the
    closed form of the function is never assumed until something is
    substituted for its head."""

    __slots__ = ("name", "args", "didx")
    kind = 4

    def __init__(self, name: str, args: tuple, didx: tuple):
        self.name = name
        self.args = args
        self.didx = didx
        self._hash = hash((4, name, didx, tuple(a._hash for a in args)))
        self._key = (4, name, didx, tuple(a._key for a in args))

    def __eq__(self, other):
        return self is other or (
            type(other) is Fn
            and other._hash == self._hash
            and other.name == self.name
            and other.didx == self.didx
            and other.args == self.args
        )

    __hash__ = Expr.__hash__


class Pow(Expr):
    __slots__ = ("expbase", "exp")
    kind = 5

    def __init__(self, expbase: Expr, exp: Fraction):
        self.expbase = expbase
        self.exp = exp
        self._hash = hash((5, expbase._hash, exp))
        self._key = (5, expbase._key, exp)

    def __eq__(self, other):
        return self is other or (
            type(other) is Pow
            and other._hash == self._hash
            and other.exp == self.exp
            and other.expbase == self.expbase
        )

    __hash__ = Expr.__hash__


class Exp(Expr):
    __slots__ = ("arg",)
    kind = 6

    def __init__(self, arg: Expr):
        self.arg = arg
        self._hash = hash((6, arg._hash))
        self._key = (6, arg._key)

    def __eq__(self, other):
        return self is other or (type(other) is Exp and other.arg == self.arg)

    __hash__ = Expr.__hash__


class Ln(Expr):
    __slots__ = ("arg",)
    kind = 7

    def __init__(self, arg: Expr):
        self.arg = arg
        self._hash = hash((7, arg._hash))
        self._key = (7, arg._key)

    def __eq__(self, other):
        return self is other or (type(other) is Ln and other.arg == self.arg)

    __hash__ = Expr.__hash__


class Product(Expr):
    __slots__ = ("factors",)
    kind = 8

    def __init__(self, factors: tuple):
        self.factors = factors
        self._hash = hash((8,) + tuple(f._hash for f in factors))
        self._key = (8, tuple(f._key for f in factors))

    def __eq__(self, other):
        return self is other or (
            type(other) is Product
            and other._hash == self._hash
            and other.factors == self.factors
        )

    __hash__ = Expr.__hash__


class Sum(Expr):
    __slots__ = ("terms",)
    kind = 9

    def __init__(self, terms: tuple):
        self.terms = terms
        self._hash = hash((9,) + tuple(t._hash for t in terms))
        self._key = (9, tuple(t._key for t in terms))

    def __eq__(self, other):
        return self is other or (
            type(other) is Sum
            and other._hash == self._hash
            and other.terms == self.terms
        )

    __hash__ = Expr.__hash__


# ---------------------------------------------------------------------------
# atom construction (interned)

_rat_cache: dict = {}
_atom_cache: dict = {}


def rat(p, q=None) -> Rat:
    v = Fraction(p) if q is None else Fraction(p, q)
    e = _rat_cache.get(v)
    if e is None:
        e = _rat_cache[v] = Rat(v)
    return e


def param(name: str) -> Param:
    key = ("p", name)
    e = _atom_cache.get(key)
    if e is None:
        e = _atom_cache[key] = Param(name)
    return e


def base(name: str) -> Base:
    key = ("b", name)
    e = _atom_cache.get(key)
    if e is None:
        e = _atom_cache[key] = Base(name)
    return e


def jet(idx: str | Iterable[str] = "") -> Jet:
    letters = tuple(sorted(idx, key=_COORD_RANK.__getitem__))
    for c in letters:
        if c not in _COORD_RANK:
            raise ExprError(f"bad jet index letter {c!r}")
    if len(letters) > MAX_JET_ORDER:
        raise ExprError(f"jet order {len(letters)} exceeds cap {MAX_JET_ORDER}")
    key = ("j", letters)
    e = _atom_cache.get(key)
    if e is None:
        e = _atom_cache[key] = Jet(letters)
    return e


def fn(name: str, args, didx=None) -> Expr:
    args = tuple(expand(_as_expr(a)) for a in args)
    if didx is None:
        didx = (0,) * len(args)
    didx = tuple(int(d) for d in didx)
    if len(didx) != len(args):
        raise ExprError(f"{name}: derivative index arity {didx} vs {len(args)} args")
    return Fn(name, args, didx)


RAT0 = rat(0)
RAT1 = rat(1)
RAT_M1 = rat(-1)
X = base("x")
Y = base("y")
T = base("t")
U = jet("")


# ---------------------------------------------------------------------------
# normalizing constructors


def _coeff_split(e: Expr):
    """Split a non-Sum, non-Rat normalized node into (rational coeff, rest)."""
    if type(e) is Product and type(e.factors[0]) is Rat:
        rest = e.factors[1:]
        if len(rest) == 1:
            return e.factors[0].value, rest[0]
        return e.factors[0].value, Product(rest)
    return Fraction(1), e


def _scale(e: Expr, c: Fraction) -> Expr:
    """c * e for normalized e carrying no rational coefficient of its own."""
    if c == 1:
        return e
    if c == 0:
        return RAT0
    if type(e) is Product:
        return Product((rat(c),) + e.factors)
    return Product((rat(c), e))


def add(*es) -> Expr:
    const = Fraction(0)
    by_rest: dict = {}
    stack = [_as_expr(e) for e in es]
    while stack:
        e = stack.pop()
        t = type(e)
        if t is Sum:
            stack.extend(e.terms)
        elif t is Rat:
            const += e.value
        else:
            c, rest = _coeff_split(e)
            acc = by_rest.get(rest)
            by_rest[rest] = c if acc is None else acc + c
    terms = [_scale(rest, c) for rest, c in by_rest.items() if c != 0]
    if const != 0:
        terms.append(rat(const))
    if not terms:
        return RAT0
    if len(terms) == 1:
        return terms[0]
    terms.sort(key=Expr.sort_key)
    return Sum(tuple(terms))


def _int_nth_root(n: int, k: int):
    """Exact k-th root of non-negative integer n, or None."""
    if n == 0:
        return 0
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def _rat_pow(v: Fraction, q: Fraction) -> Expr:
    if q.denominator == 1:
        k = int(q)
        if v == 0:
            if k < 0:
                raise SingularError("0 raised to a negative power")
            return RAT0 if k > 0 else RAT1
        return rat(v ** k)
    if v == 0:
        if q > 0:
            return RAT0
        raise SingularError("0 raised to a negative power")
    if v > 0:
        w = v ** q.numerator
        rn = _int_nth_root(w.numerator, q.denominator)
        rd = _int_nth_root(w.denominator, q.denominator)
        if rn is not None and rd is not None:
            return rat(Fraction(rn, rd))
    return Pow(rat(v), q)


def pow_(b, q) -> Expr:
    b = _as_expr(b)
    q = Fraction(q)
    if q == 0:
        return RAT1
    if q == 1:
        return b
    t = type(b)
    if t is Rat:
        return _rat_pow(b.value, q)
    if t is Pow:
        return pow_(b.expbase, b.exp * q)
    if t is Exp:
        return exp_(mul(rat(q), b.arg))
    if t is Product and q.denominator == 1:
        return mul(*[pow_(f, q) for f in b.factors])
    return Pow(b, q)


def mul(*es) -> Expr:
    coeff = Fraction(1)
    bases: dict = {}
    exp_args: list = []
    stack = [_as_expr(e) for e in es]
    while stack:
        e = stack.pop()
        t = type(e)
        if t is Rat:
            if e.value == 0:
                return RAT0
            coeff *= e.value
        elif t is Product:
            stack.extend(e.factors)
        elif t is Pow:
            acc = bases.get(e.expbase)
            bases[e.expbase] = e.exp if acc is None else acc + e.exp
        elif t is Exp:
            exp_args.append(e.arg)
        else:
            acc = bases.get(e)
            bases[e] = Fraction(1) if acc is None else acc + 1

    factors: list = []
    redo: list = []
    for b, q in bases.items():
        f = pow_(b, q)
        tf = type(f)
        if tf is Rat:
            if f.value == 0:
                return RAT0
            coeff *= f.value
        elif tf is Product or tf is Exp:
            redo.append(f)
        else:
            factors.append(f)
    if exp_args:
        f = exp_(add(*exp_args))
        tf = type(f)
        if tf is Rat:
            coeff *= f.value
            if coeff == 0:
                return RAT0
        elif tf is Exp:
            # plain exp factor: already consolidated, keep directly (routing it
            # through the redo pass would recurse forever)
            factors.append(f)
        else:
            redo.append(f)
    if redo:
        return mul(rat(coeff), *factors, *redo)
    if not factors:
        return rat(coeff)
    if coeff == 1 and len(factors) == 1:
        return factors[0]
    factors.sort(key=Expr.sort_key)
    if coeff != 1:
        factors.insert(0, rat(coeff))
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def _ln_coeff_term(term: Expr):
    """Return (q, E) when term == q*ln(E) with rational q, else None."""
    if type(term) is Ln:
        return Fraction(1), term.arg
    if (
        type(term) is Product
        and len(term.factors) == 2
        and type(term.factors[0]) is Rat
        and type(term.factors[1]) is Ln
    ):
        return term.factors[0].value, term.factors[1].arg
    return None


def exp_(a) -> Expr:
    a = expand(_as_expr(a))
    if a == RAT0:
        return RAT1
    if type(a) is Ln:
        return a.arg
    terms = a.terms if type(a) is Sum else (a,)
    pulled: list = []
    kept: list = []
    for term in terms:
        hit = _ln_coeff_term(term)
        if hit is not None:
            pulled.append(pow_(hit[1], hit[0]))
        else:
            kept.append(term)
    if not pulled:
        return Exp(a)
    rem = add(*kept)
    if rem == RAT0:
        return mul(*pulled)
    return mul(*pulled, Exp(rem))


def ln_(a) -> Expr:
    a = expand(_as_expr(a))
    if a == RAT1:
        return RAT0
    if a == RAT0:
        raise SingularError("ln(0)")
    if type(a) is Exp:
        return a.arg
    if type(a) is Product:
        exps = [f for f in a.factors if type(f) is Exp]
        if exps:
            rest = [f for f in a.factors if type(f) is not Exp]
            inner = mul(*rest) if rest else RAT1
            return add(ln_(inner), *[f.arg for f in exps])
    return Ln(a)


def neg(e) -> Expr:
    return mul(RAT_M1, _as_expr(e))


def sub(a, b) -> Expr:
    return add(_as_expr(a), neg(b))


def div(a, b) -> Expr:
    return mul(_as_expr(a), pow_(b, Fraction(-1)))


def normalize(e) -> Expr:
    """Rebuild an arbitrary tree through the normalizing constructors."""
    e = _as_expr(e)
    t = type(e)
    if t is Rat:
        return rat(e.value)
    if t in (Param, Base):
        return e
    if t is Jet:
        return jet(e.idx)
    if t is Fn:
        return fn(e.name, tuple(normalize(a) for a in e.args), e.didx)
    if t is Sum:
        return add(*[normalize(x) for x in e.terms])
    if t is Product:
        return mul(*[normalize(x) for x in e.factors])
    if t is Pow:
        return pow_(normalize(e.expbase), e.exp)
    if t is Exp:
        return exp_(normalize(e.arg))
    if t is Ln:
        return ln_(normalize(e.arg))
    raise ExprError(f"unknown node {e!r}")


def expand(e) -> Expr:
    """Distribute products over sums and integer powers of sums.

    Input must already be normalized; output is normalized and fully
    distributed (exp/ln/function arguments are expanded but stay opaque)."""
    e = _as_expr(e)
    t = type(e)
    if t in (Rat, Param, Base, Jet):
        return e
    if t is Fn:
        return fn(e.name, tuple(expand(a) for a in e.args), e.didx)
    if t is Sum:
        return add(*[expand(x) for x in e.terms])
    if t is Product:
        terms = [RAT1]
        for f in e.factors:
            f = expand(f)
            if type(f) is Sum:
                terms = [mul(a, b) for a in terms for b in f.terms]
            else:
                terms = [mul(a, f) for a in terms]
        return add(*terms)
    if t is Pow:
        b = expand(e.expbase)
        if type(b) is Sum and e.exp.denominator == 1 and e.exp > 1:
            # distribute term lists directly: mul(b, b) would re-merge the
            # equal bases into Pow(b, 2) and loop
            terms = [RAT1]
            for _ in range(int(e.exp)):
                terms = [mul(a, s) for a in terms for s in b.terms]
            return add(*terms)
        return pow_(b, e.exp)
    if t is Exp:
        return exp_(expand(e.arg))
    if t is Ln:
        return ln_(expand(e.arg))
    raise ExprError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# differentiation and substitution


def diff(e, v) -> Expr:
    """Partial derivative with respect to an atom (Base, Jet or Param).

    Jet coordinates are mutually independent: diff(u_x, x) == 0.  Opaque
    functions follow the chain rule through their arguments, raising the
    derivative multi-index on the head."""
    e = _as_expr(e)
    if not isinstance(v, (Base, Jet, Param)):
        raise ExprError(f"cannot differentiate with respect to {v!r}")
    t = type(e)
    if t is Rat:
        return RAT0
    if t in (Param, Base, Jet):
        return RAT1 if e == v else RAT0
    if t is Fn:
        parts = []
        for i, a in enumerate(e.args):
            da = diff(a, v)
            if da == RAT0:
                continue
            didx = list(e.didx)
            didx[i] += 1
            parts.append(mul(Fn(e.name, e.args, tuple(didx)), da))
        return add(*parts)
    if t is Sum:
        return add(*[diff(x, v) for x in e.terms])
    if t is Product:
        parts = []
        for i, f in enumerate(e.factors):
            df = diff(f, v)
            if df == RAT0:
                continue
            rest = e.factors[:i] + e.factors[i + 1:]
            parts.append(mul(df, *rest))
        return add(*parts)
    if t is Pow:
        return mul(rat(e.exp), pow_(e.expbase, e.exp - 1), diff(e.expbase, v))
    if t is Exp:
        return mul(e, diff(e.arg, v))
    if t is Ln:
        return mul(diff(e.arg, v), pow_(e.arg, Fraction(-1)))
    raise ExprError(f"unknown node {e!r}")


class SingularSubstitutionError(SingularError):
    pass


def substitute(e, bindings: Mapping[Expr, Expr]) -> Expr:
    """Simultaneous substitution, then normalization.

    Keys may be atoms (Param/Base/Jet) or opaque-function nodes.  A function
    key with an all-zero derivative index binds the *head*: every occurrence
    of that head, including differentiated ones, is replaced by the
    appropriate derivative of the replacement (the key's arguments must be
    atoms and name the replacement's slots).  A key with a nonzero
    derivative index only matches that exact node."""
    exact: dict = {}
    heads: dict = {}
    for k, v in bindings.items():
        k = normalize(k)
        v = normalize(_as_expr(v))
        if isinstance(k, (Param, Base, Jet)):
            exact[k] = v
        elif isinstance(k, Fn):
            if any(d != 0 for d in k.didx):
                exact[k] = v
            else:
                for a in k.args:
                    if not isinstance(a, (Param, Base, Jet)):
                        raise ExprError(
                            f"head binding for {k.name} needs atomic formal arguments"
                        )
                heads[(k.name, len(k.args))] = (k.args, v)
        else:
            raise ExprError(f"substitution key must be an atom or function node: {k!r}")

    try:
        return _sub(normalize(e), exact, heads)
    except SingularError as err:
        raise SingularSubstitutionError(str(err)) from err


def _sub(e: Expr, exact, heads) -> Expr:
    hit = exact.get(e)
    if hit is not None:
        return hit
    t = type(e)
    if t in (Rat, Param, Base, Jet):
        return e
    if t is Fn:
        new_args = tuple(_sub(a, exact, heads) for a in e.args)
        bound = heads.get((e.name, len(e.args)))
        if bound is not None:
            formals, rep = bound
            out = rep
            for slot, k in enumerate(e.didx):
                for _ in range(k):
                    out = diff(out, formals[slot])
            renames = {
                f: a for f, a in zip(formals, new_args) if f != a
            }
            if renames:
                out = _sub(out, renames, {})
            return out
        return fn(e.name, new_args, e.didx)
    if t is Sum:
        return add(*[_sub(x, exact, heads) for x in e.terms])
    if t is Product:
        return mul(*[_sub(x, exact, heads) for x in e.factors])
    if t is Pow:
        return pow_(_sub(e.expbase, exact, heads), e.exp)
    if t is Exp:
        return exp_(_sub(e.arg, exact, heads))
    if t is Ln:
        return ln_(_sub(e.arg, exact, heads))
    raise ExprError(f"unknown node {e!r}")


# ---------------------------------------------------------------------------
# structure queries


def _walk(e: Expr):
    yield e
    t = type(e)
    if t is Fn:
        for a in e.args:
            yield from _walk(a)
    elif t is Sum:
        for x in e.terms:
            yield from _walk(x)
    elif t is Product:
        for x in e.factors:
            yield from _walk(x)
    elif t is Pow:
        yield from _walk(e.expbase)
    elif t in (Exp, Ln):
        yield from _walk(e.arg)


def atoms_of(e: Expr) -> set:
    return {n for n in _walk(_as_expr(e)) if isinstance(n, (Param, Base, Jet))}


def jets_of(e: Expr) -> set:
    return {n for n in _walk(_as_expr(e)) if isinstance(n, Jet)}


def fn_nodes_of(e: Expr) -> set:
    return {n for n in _walk(_as_expr(e)) if isinstance(n, Fn)}


def max_jet_order(e: Expr) -> int:
    return max((n.order for n in jets_of(e)), default=-1)


def contains(e: Expr, target: Expr) -> bool:
    return any(n == target for n in _walk(_as_expr(e)))


def rational_content(e: Expr) -> Fraction:
    """gcd of the rational coefficients of an expanded expression's terms
    (sign taken from the first term); 0 for the zero expression."""
    e = _as_expr(e)
    if e == RAT0:
        return Fraction(0)
    terms = e.terms if type(e) is Sum else (e,)
    coeffs = []
    for t in terms:
        if type(t) is Rat:
            coeffs.append(t.value)
        else:
            coeffs.append(_coeff_split(t)[0])
    g = Fraction(0)
    for c in coeffs:
        g = _frac_gcd(g, c)
    return -g if coeffs[0] < 0 else g


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    from math import gcd, lcm

    if a == 0:
        return abs(b)
    if b == 0:
        return abs(a)
    return Fraction(gcd(a.numerator, b.numerator), lcm(a.denominator, b.denominator))


# ---------------------------------------------------------------------------
# monomial collection


class MonomialKey:
    """Canonical multiset of (jet, positive power) pairs; () is the constant
    monomial."""

    __slots__ = ("powers",)

    def __init__(self, powers: Iterable = ()):
        self.powers = tuple(sorted(powers, key=lambda p: p[0].sort_key()))

    def __hash__(self):
        return hash(self.powers)

    def __eq__(self, other):
        return isinstance(other, MonomialKey) and other.powers == self.powers

    def __lt__(self, other):
        return self._rank() < other._rank()

    def _rank(self):
        return (
            sum(k for _, k in self.powers),
            tuple((j.sort_key(), k) for j, k in self.powers),
        )

    def as_expr(self) -> Expr:
        return mul(*[pow_(j, k) for j, k in self.powers]) if self.powers else RAT1

    def __str__(self):
        if not self.powers:
            return "1"
        return format_expr(self.as_expr())

    def __repr__(self):
        return f"MonomialKey({self})"


def clear_sum_denominators(e: Expr) -> Expr:
    """Multiply through by positive powers of Sum-shaped bases occurring with
    negative exponents until none remains, expanding at each step.  The
    result vanishes identically iff the input does (the cleared bases are
    nonzero wherever the input is defined)."""
    from math import ceil

    e = expand(_as_expr(e))
    for _ in range(6):
        need: dict = {}
        terms = e.terms if type(e) is Sum else (e,)
        for term in terms:
            factors = term.factors if type(term) is Product else (term,)
            for f in factors:
                if type(f) is Pow and f.exp < 0 and type(f.expbase) is Sum:
                    k = ceil(-f.exp)
                    if k > need.get(f.expbase, 0):
                        need[f.expbase] = k
        if not need:
            return e
        # merge the clearing powers into each term separately so that
        # base^(-k) * base^k cancels before any distribution happens
        mult = [
            pow_(b, k)
            for b, k in sorted(need.items(), key=lambda bk: bk[0].sort_key())
        ]
        e = add(*[expand(mul(term, *mult)) for term in terms])
    raise ExprError("could not clear sum denominators")


def vanishes(e: Expr) -> bool:
    """Zero test modulo expansion and denominator clearing."""
    return clear_sum_denominators(e) == RAT0


def collect_atoms(e: Expr, variables) -> dict:
    """Write ``e`` as a sum of monomial * coefficient over the given atoms.

    Keys are sorted tuples of (atom, positive power); the empty tuple is the
    constant monomial.  Coefficients are free of the atoms.  Raises
    NonPolynomialError if an atom occurs inside an exp/ln/function argument
    or with a non-positive-integer exponent."""
    variables = set(variables)
    e = expand(_as_expr(e))
    out: dict = {}
    if e == RAT0:
        return {}
    terms = e.terms if type(e) is Sum else (e,)
    for term in terms:
        factors = term.factors if type(term) is Product else (term,)
        powers: dict = {}
        coeff_parts = []
        for f in factors:
            tf = type(f)
            if f in variables:
                powers[f] = powers.get(f, 0) + 1
            elif tf is Pow and f.expbase in variables:
                if f.exp.denominator != 1 or f.exp < 0:
                    raise NonPolynomialError(
                        f"{f.expbase} occurs with exponent {f.exp}"
                    )
                powers[f.expbase] = powers.get(f.expbase, 0) + int(f.exp)
            else:
                bad = variables & atoms_of(f)
                if bad:
                    raise NonPolynomialError(
                        f"non-polynomial dependence on {sorted(map(str, bad))} in {f}"
                    )
                coeff_parts.append(f)
        key = tuple(sorted(powers.items(), key=lambda p: p[0].sort_key()))
        contrib = mul(*coeff_parts) if coeff_parts else RAT1
        prev = out.get(key)
        out[key] = contrib if prev is None else add(prev, contrib)
    return {k: v for k, v in out.items() if v != RAT0}


def collect(e: Expr, variables) -> dict:
    """collect_atoms specialised to jet coordinates, keyed by MonomialKey."""
    raw = collect_atoms(e, variables)
    return {MonomialKey(k): v for k, v in raw.items()}


# ---------------------------------------------------------------------------
# numeric evaluation


def default_fn_sampler(seed: int = 0) -> Callable:
    """Deterministic smooth stand-in for opaque functions: every (name,
    derivative-index) pair gets its own quadratic polynomial in the
    arguments, so distinct heads/derivatives are independent."""
    import random

    cache: dict = {}

    def call(name, didx, args):
        key = (name, didx, len(args))
        poly = cache.get(key)
        if poly is None:
            rng = random.Random(f"{seed}:{name}:{didx}:{len(args)}")
            const = rng.uniform(-2, 2)
            lin = [rng.uniform(-2, 2) for _ in args]
            quad = [rng.uniform(-1, 1) for _ in args]
            poly = cache[key] = (const, lin, quad)
        const, lin, quad = poly
        v = const
        for a, c1, c2 in zip(args, lin, quad):
            v += c1 * a + c2 * a * a
        return v

    return call


def eval_numeric(e: Expr, point: Mapping[Expr, float], fns: Callable | None = None) -> float:
    """Evaluate at a point binding every atom to a float.

    ``fns(name, didx, arg_values)`` supplies values for opaque functions;
    when omitted, the deterministic default sampler is used."""
    import math

    if fns is None:
        fns = default_fn_sampler()

    def ev(n: Expr) -> float:
        t = type(n)
        if t is Rat:
            return float(n.value)
        if t in (Param, Base, Jet):
            try:
                return float(point[n])
            except KeyError:
                raise UnboundAtomError(f"unbound atom {n}") from None
        if t is Fn:
            return float(fns(n.name, n.didx, tuple(ev(a) for a in n.args)))
        if t is Sum:
            return sum(ev(x) for x in n.terms)
        if t is Product:
            v = 1.0
            for x in n.factors:
                v *= ev(x)
            return v
        if t is Pow:
            b = ev(n.expbase)
            q = n.exp
            if b == 0 and q < 0:
                raise EvalDomainError("division by zero")
            if b < 0:
                if q.denominator == 1:
                    return b ** int(q)
                raise EvalDomainError(f"negative base {b} for exponent {q}")
            return b ** float(q)
        if t is Exp:
            v = ev(n.arg)
            if v > 700:
                raise EvalDomainError("exp overflow")
            return math.exp(v)
        if t is Ln:
            v = ev(n.arg)
            if v <= 0:
                raise EvalDomainError(f"ln of non-positive value {v}")
            return math.log(v)
        raise ExprError(f"unknown node {n!r}")

    return ev(_as_expr(e))


def random_point(atoms, rng, box=(0.3, 2.3)) -> dict:
    lo, hi = box
    return {a: rng.uniform(lo, hi) for a in sorted(atoms, key=Expr.sort_key)}


def equal_numeric(
    a: Expr,
    b: Expr,
    n_points: int = 20,
    tol: float = 1e-9,
    box=(0.3, 2.3),
    seed: int = 0,
    fns: Callable | None = None,
) -> bool:
    """Sample both expressions at random points and compare
    |a - b| <= tol * (1 + |a|) everywhere.  Points raising domain errors are
    resampled (up to a fixed retry budget)."""
    import random

    rng = random.Random(seed)
    atoms = atoms_of(a) | atoms_of(b)
    if fns is None:
        fns = default_fn_sampler(seed)
    done = 0
    attempts = 0
    while done < n_points:
        attempts += 1
        if attempts > 50 * n_points:
            raise EvalDomainError("could not find enough in-domain sample points")
        pt = random_point(atoms, rng, box)
        try:
            va = eval_numeric(a, pt, fns)
            vb = eval_numeric(b, pt, fns)
        except EvalDomainError:
            continue
        if abs(va - vb) > tol * (1.0 + abs(va)):
            return False
        done += 1
    return True


# ---------------------------------------------------------------------------
# formatting


def _frac_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _needs_parens_in_product(e: Expr) -> bool:
    return type(e) is Sum


def _pow_base_str(e: Expr) -> str:
    if type(e) in (Param, Base, Jet, Exp, Ln, Fn) or (
        type(e) is Rat and e.value >= 0 and e.value.denominator == 1
    ):
        return format_expr(e)
    return f"({format_expr(e)})"


def format_expr(e: Expr) -> str:
    """Render in the input grammar; parse(format_expr(e)) == e whenever e
    only uses grammar-expressible nodes (no differentiated function heads)."""
    t = type(e)
    if t is Rat:
        return _frac_str(e.value)
    if t in (Param, Base):
        return e.name
    if t is Jet:
        return "u" if not e.idx else "u_" + "".join(e.idx)
    if t is Fn:
        total = sum(e.didx)
        if total == 0:
            head = e.name
        elif len(e.args) == 1 and total <= 3:
            head = e.name + "'" * total
        else:
            head = e.name + "[" + ",".join(map(str, e.didx)) + "]"
        return head + "(" + ", ".join(format_expr(a) for a in e.args) + ")"
    if t is Exp:
        return f"exp({format_expr(e.arg)})"
    if t is Ln:
        return f"ln({format_expr(e.arg)})"
    if t is Pow:
        q = e.exp
        if q.denominator == 1 and q > 0:
            return f"{_pow_base_str(e.expbase)}^{q.numerator}"
        return f"{_pow_base_str(e.expbase)}^({_frac_str(q)})"
    if t is Product:
        factors = list(e.factors)
        prefix = ""
        if type(factors[0]) is Rat:
            c = factors[0].value
            factors = factors[1:]
            if c == -1:
                prefix = "-"
            else:
                prefix = _frac_str(c) + "*"
        body = "*".join(
            f"({format_expr(f)})" if _needs_parens_in_product(f) else format_expr(f)
            for f in factors
        )
        return prefix + body
    if t is Sum:
        out = []
        for i, term in enumerate(e.terms):
            c, rest = (term.value, None) if type(term) is Rat else _coeff_split(term)
            if i == 0:
                out.append(format_expr(term))
                continue
            if c < 0:
                flipped = rat(-c) if rest is None else _scale(rest, -c)
                out.append(" - " + format_expr(flipped))
            else:
                out.append(" + " + format_expr(term))
        return "".join(out)
    raise ExprError(f"unknown node {e!r}")
