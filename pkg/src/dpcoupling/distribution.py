"""Finite-support sub-distributions and truncated discrete Laplace samplers."""

from __future__ import annotations

import ast
import itertools
import math
from functools import lru_cache
from typing import Any, Callable, Dict, Hashable, Iterable, Iterator, List, Mapping, Tuple

MASS_TOL = 1e-12
DEFAULT_TAIL_TOLERANCE = 1e-9


class DistributionError(ValueError):
    pass


def _sort_key(v):
    # bools before ints would compare fine, but mixed carriers (e.g. the
    # empty distribution) still need a total order for serialization
    return (type(v).__name__, v)


class SubDistribution:
    """Immutable finite map from values to positive weights of total mass <= 1.

    ``full`` marks a proper distribution (mass 1 within 1e-12).  Passing
    ``full=None`` infers the flag from the mass.
    """

    __slots__ = ("_w", "_full", "_items", "_mass")

    def __init__(self, weights: Mapping[Hashable, float] | Iterable[Tuple[Hashable, float]] = (),
                 full: bool | None = None):
        items = weights.items() if isinstance(weights, Mapping) else weights
        w: Dict[Hashable, float] = {}
        for v, p in items:
            p = float(p)
            if p < 0 or math.isnan(p):
                raise DistributionError(f"invalid weight {p!r} at {v!r}")
            if p > 0:
                w[v] = w.get(v, 0.0) + p
        mass = math.fsum(w.values())
        if mass > 1 + MASS_TOL:
            raise DistributionError(f"total mass {mass!r} exceeds 1")
        near_one = abs(mass - 1.0) <= MASS_TOL
        if full is None:
            full = near_one
        elif full and not near_one:
            raise DistributionError(f"full distribution has mass {mass!r}")
        self._w = w
        self._full = bool(full)
        self._items = None
        self._mass = mass

    # -- basic queries -----------------------------------------------------
    @property
    def full(self) -> bool:
        return self._full

    def mass(self) -> float:
        return self._mass

    def support(self) -> List[Hashable]:
        """Support values in ascending order."""
        return [v for v, _ in self.items()]

    def items(self) -> List[Tuple[Hashable, float]]:
        if self._items is None:
            try:
                self._items = sorted(self._w.items())
            except TypeError:
                self._items = sorted(self._w.items(), key=lambda kv: _sort_key(kv[0]))
        return self._items

    def weights(self) -> Dict[Hashable, float]:
        return dict(self._w)

    def __getitem__(self, v) -> float:
        return self._w.get(v, 0.0)

    def __contains__(self, v) -> bool:
        return v in self._w

    def __len__(self) -> int:
        return len(self._w)

    def __iter__(self) -> Iterator[Hashable]:
        return iter(self.support())

    def __repr__(self) -> str:
        body = ", ".join(f"{v!r}: {p:.6g}" for v, p in self.items()[:8])
        more = ", ..." if len(self) > 8 else ""
        return f"SubDistribution({{{body}{more}}}, full={self._full})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, SubDistribution):
            return NotImplemented
        return self._w == other._w

    __hash__ = None

    def prob(self, pred: Callable[[Any], bool]) -> float:
        return math.fsum(p for v, p in self._w.items() if pred(v))

    def close_to(self, other: "SubDistribution", tol: float = 1e-9) -> bool:
        keys = set(self._w) | set(other._w)
        return all(abs(self[k] - other[k]) <= tol for k in keys)

    # -- monadic structure -------------------------------------------------
    def bind(self, k: Callable[[Any], "SubDistribution"]) -> "SubDistribution":
        out: Dict[Hashable, float] = {}
        for v, p in self._w.items():
            for w, q in k(v)._w.items():
                out[w] = out.get(w, 0.0) + p * q
        return SubDistribution(_clip(out))

    def map(self, f: Callable[[Any], Hashable]) -> "SubDistribution":
        """Pushforward along ``f`` (mass preserving)."""
        out: Dict[Hashable, float] = {}
        for v, p in self._w.items():
            key = f(v)
            out[key] = out.get(key, 0.0) + p
        return SubDistribution(_clip(out), full=self._full or None)

    def scale(self, c: float) -> "SubDistribution":
        return SubDistribution({v: p * c for v, p in self._w.items()})

    # -- serialization -----------------------------------------------------
    def to_text(self) -> str:
        return "".join(f"{_show_value(v)}\t{p:.17g}\n" for v, p in self.items())

    @classmethod
    def from_text(cls, text: str) -> "SubDistribution":
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                val, weight = line.split("\t") if "\t" in line else line.split()
                pairs.append((parse_value(val.strip()), float(weight)))
            except (ValueError, SyntaxError) as err:
                raise DistributionError(f"line {lineno}: cannot parse {line!r}") from err
        seen = set()
        for v, _ in pairs:
            if v in seen:
                raise DistributionError(f"duplicate support value {v!r}")
            seen.add(v)
        return cls(pairs)


def _clip(w: Dict[Hashable, float]) -> Dict[Hashable, float]:
    # floating-point accumulation can overshoot 1 by a few ulps
    mass = math.fsum(w.values())
    if 1.0 < mass <= 1.0 + 1e-9:
        return {v: p / mass for v, p in w.items()}
    return w


def _show_value(v) -> str:
    if isinstance(v, tuple):
        return "(" + ", ".join(_show_value(x) for x in v) + ("," if len(v) == 1 else "") + ")"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def parse_value(s: str):
    """Inverse of the value syntax used in distribution files."""
    if s in ("true", "false"):
        return s == "true"
    v = ast.literal_eval(s)
    if isinstance(v, float):
        raise ValueError("values must be integers")
    return v


def empty() -> SubDistribution:
    return SubDistribution({}, full=False)


def point(v) -> SubDistribution:
    return SubDistribution({v: 1.0}, full=True)


def mass(mu: SubDistribution) -> float:
    return mu.mass()


def support(mu: SubDistribution) -> List[Hashable]:
    return mu.support()


def prob(mu: SubDistribution, pred: Callable[[Any], bool]) -> float:
    return mu.prob(pred)


def bind(mu: SubDistribution, k: Callable[[Any], SubDistribution]) -> SubDistribution:
    return mu.bind(k)


def marginal1(mu: SubDistribution) -> SubDistribution:
    return mu.map(lambda ab: ab[0])


def marginal2(mu: SubDistribution) -> SubDistribution:
    return mu.map(lambda ab: ab[1])


def uniform(values: Iterable[Hashable]) -> SubDistribution:
    values = list(values)
    return SubDistribution({v: 1.0 / len(values) for v in values}, full=True)


def dp_divergence(mu1: SubDistribution, mu2: SubDistribution, eps: float) -> float:
    """ε-DP divergence: sum over b of max(0, mu1(b) - e^eps mu2(b))."""
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    factor = math.exp(eps)
    return max(0.0, math.fsum(max(0.0, p - factor * mu2[b]) for b, p in mu1._w.items()))


def dp_divergence_bruteforce(mu1: SubDistribution, mu2: SubDistribution,
                             eps: float) -> float:
    """Supremum over every event of the joint support (exponential time)."""
    if eps < 0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    carrier = list(set(mu1._w) | set(mu2._w))
    factor = math.exp(eps)
    best = 0.0
    for r in range(len(carrier) + 1):
        for event in itertools.combinations(carrier, r):
            gap = math.fsum(mu1[b] for b in event) - factor * math.fsum(mu2[b] for b in event)
            best = max(best, gap)
    return best


# ---------------------------------------------------------------------------
# Truncated discrete Laplace
# ---------------------------------------------------------------------------

def _check_params(scale_eps: float, radius: int) -> None:
    if not scale_eps > 0:
        raise DistributionError(f"scale must be positive, got {scale_eps}")
    if int(radius) != radius or radius < 1:
        raise DistributionError(f"radius must be a positive integer, got {radius}")


@lru_cache(maxsize=256)
def laplace_offsets(scale_eps: float, radius: int, one_sided: bool = False) -> Tuple[Tuple[int, float], ...]:
    """Normalized ``(offset, weight)`` pairs of the truncated noise."""
    _check_params(scale_eps, radius)
    lo = 0 if one_sided else -radius
    offs = range(lo, radius + 1)
    raw = [math.exp(-scale_eps * abs(v)) for v in offs]
    z = math.fsum(raw)
    return tuple((v, r / z) for v, r in zip(offs, raw))


def truncated_laplace(center: int, scale_eps: float, radius: int) -> SubDistribution:
    """Discrete Laplace around ``center`` restricted to [center-R, center+R]."""
    return SubDistribution({center + v: p for v, p in laplace_offsets(scale_eps, radius)},
                           full=True)


def truncated_oslaplace(center: int, scale_eps: float, radius: int) -> SubDistribution:
    """One-sided discrete Laplace on [center, center+R]."""
    return SubDistribution({center + v: p for v, p in laplace_offsets(scale_eps, radius, True)},
                           full=True)


def tail_mass(scale_eps: float, radius: int) -> float:
    """Mass the untruncated two-sided discrete Laplace puts outside [-R, R].

    With a = exp(-eps) the normalizer is (1 + a)/(1 - a) and each tail sums
    to a^(R+1)/(1 - a), so the tail fraction is 2 a^(R+1)/(1 + a).  It also
    bounds the one-sided tail a^(R+1).
    """
    if not scale_eps > 0:
        raise DistributionError(f"scale must be positive, got {scale_eps}")
    if radius < 0:
        raise DistributionError("radius must be non-negative")
    a = math.exp(-scale_eps)
    return 2.0 * math.exp(-scale_eps * (radius + 1)) / (1.0 + a)


def radius_for_tolerance(scale_eps: float, tol: float = DEFAULT_TAIL_TOLERANCE) -> int:
    """Smallest R >= 1 with tail_mass(scale_eps, R) < tol."""
    if not 0 < tol < 1:
        raise DistributionError("tolerance must lie in (0, 1)")
    a = math.exp(-scale_eps)
    guess = math.ceil(-math.log(tol * (1 + a) / 2) / scale_eps) - 1
    r = max(1, guess - 1)
    while tail_mass(scale_eps, r) >= tol:
        r += 1
    while r > 1 and tail_mass(scale_eps, r - 1) < tol:
        r -= 1
    return r
