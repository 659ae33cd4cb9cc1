"""Exact planar geometry over the rationals.

All coordinates, lengths and parameters are ``Fraction`` values. Nothing in
this module rounds; float conversions exist only for presentation.
"""
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, atan2, isqrt
from typing import Optional, Tuple, Union

Scalar = Fraction
ScalarLike = Union[Fraction, int, str]


def to_scalar(value: ScalarLike) -> Scalar:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact scalars")
    return Fraction(value)


def parse_scalar(text: str) -> Scalar:
    """Parse ``p/q`` or an integer ``p``."""
    text = text.strip()
    if not text:
        raise ValueError("empty rational")
    if '/' in text:
        num, den = text.split('/', 1)
        if int(den) == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def format_scalar(value: Scalar) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def ceil_sqrt(value: Scalar) -> int:
    """Smallest integer n with n*n >= value (value >= 0)."""
    if value <= 0:
        return 0
    n = isqrt(value.numerator // value.denominator)
    while n * n < value:
        n += 1
    return n


@dataclass(frozen=True, order=True)
class Vec2:
    x: Scalar
    y: Scalar

    def __post_init__(self):
        object.__setattr__(self, 'x', to_scalar(self.x))
        object.__setattr__(self, 'y', to_scalar(self.y))

    @staticmethod
    def of(x: ScalarLike, y: ScalarLike) -> 'Vec2':
        return Vec2(to_scalar(x), to_scalar(y))

    def __add__(self, other: 'Vec2') -> 'Vec2':
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: 'Vec2') -> 'Vec2':
        return Vec2(self.x - other.x, self.y - other.y)

    def __neg__(self) -> 'Vec2':
        return Vec2(-self.x, -self.y)

    def scale(self, k: ScalarLike) -> 'Vec2':
        k = to_scalar(k)
        return Vec2(self.x * k, self.y * k)

    def dot(self, other: 'Vec2') -> Scalar:
        return self.x * other.x + self.y * other.y

    def cross(self, other: 'Vec2') -> Scalar:
        return self.x * other.y - self.y * other.x

    def norm_sq(self) -> Scalar:
        return self.x * self.x + self.y * self.y

    def is_zero(self) -> bool:
        return self.x == 0 and self.y == 0

    def transform(self, m: 'Matrix2') -> 'Vec2':
        (a, b), (c, d) = m
        return Vec2(a * self.x + b * self.y, c * self.x + d * self.y)

    def angle(self) -> float:
        """Presentation only."""
        return atan2(float(self.y), float(self.x))

    def __str__(self) -> str:
        return f"({format_scalar(self.x)}, {format_scalar(self.y)})"


Matrix2 = Tuple[Tuple[Scalar, Scalar], Tuple[Scalar, Scalar]]

ZERO = Vec2(Fraction(0), Fraction(0))


def matrix(a: ScalarLike, b: ScalarLike, c: ScalarLike, d: ScalarLike) -> Matrix2:
    return ((to_scalar(a), to_scalar(b)), (to_scalar(c), to_scalar(d)))


def determinant(m: Matrix2) -> Scalar:
    (a, b), (c, d) = m
    return a * d - b * c


def inverse(m: Matrix2) -> Matrix2:
    (a, b), (c, d) = m
    det = determinant(m)
    return ((d / det, -b / det), (-c / det, a / det))


def same_direction(u: Vec2, v: Vec2) -> bool:
    """True when u and v are positive multiples of each other."""
    return u.cross(v) == 0 and u.dot(v) > 0


def strictly_between(u: Vec2, w: Vec2, d: Vec2) -> bool:
    """d lies strictly inside the counterclockwise cone from u to w (angle < pi)."""
    return u.cross(d) > 0 and d.cross(w) > 0


def in_sector(u: Vec2, w: Vec2, d: Vec2) -> bool:
    """d lies in the half-open counterclockwise sector [u, w) with angle(u, w) < pi."""
    return same_direction(u, d) or strictly_between(u, w, d)


def upper_half(d: Vec2) -> bool:
    """Canonical orientation mod pi: dy > 0, or dy == 0 and dx > 0."""
    return d.y > 0 or (d.y == 0 and d.x > 0)


def angle_less(u: Vec2, v: Vec2) -> bool:
    """Order by argument in [0, 2*pi) starting from the positive x-axis."""
    hu, hv = not upper_half(u), not upper_half(v)
    if hu != hv:
        return hv
    return u.cross(v) > 0


def point_on_segment(p: Vec2, a: Vec2, b: Vec2) -> bool:
    """p in the closed segment [a, b]."""
    ab = b - a
    ap = p - a
    if ab.cross(ap) != 0:
        return False
    t = ap.dot(ab)
    return 0 <= t <= ab.norm_sq()


def point_in_open_segment(p: Vec2, a: Vec2, b: Vec2) -> bool:
    return point_on_segment(p, a, b) and p != a and p != b


def ray_segment_hit(origin: Vec2, direction: Vec2, a: Vec2, b: Vec2) -> Optional[Tuple[Scalar, Scalar]]:
    """Transversal intersection of origin + s*direction with segment a + u*(b - a).

    Returns (s, u) with u in [0, 1], or None when parallel or missed.
    """
    e = b - a
    denom = direction.cross(e)
    if denom == 0:
        return None
    w = a - origin
    s = w.cross(e) / denom
    u = w.cross(direction) / denom
    if u < 0 or u > 1:
        return None
    return s, u


def collinear_overlap(origin: Vec2, direction: Vec2, a: Vec2, b: Vec2) -> Optional[Tuple[Scalar, Scalar]]:
    """Parameter range [s0, s1] where the ray line overlaps segment [a, b]."""
    if direction.cross(b - a) != 0 or direction.cross(a - origin) != 0:
        return None
    nd = direction.norm_sq()
    sa = (a - origin).dot(direction) / nd
    sb = (b - origin).dot(direction) / nd
    return (min(sa, sb), max(sa, sb))


def primitive_direction(v: Vec2) -> Tuple[int, int]:
    """Integer primitive vector positively parallel to v."""
    if v.is_zero():
        raise ValueError("zero vector has no direction")
    den = v.x.denominator * v.y.denominator // gcd(v.x.denominator, v.y.denominator)
    ix = int(v.x * den)
    iy = int(v.y * den)
    g = gcd(abs(ix), abs(iy))
    return ix // g, iy // g


def squared_distance_to_segment(p: Vec2, a: Vec2, b: Vec2) -> Scalar:
    ab = b - a
    nab = ab.norm_sq()
    if nab == 0:
        return (p - a).norm_sq()
    t = (p - a).dot(ab) / nab
    if t <= 0:
        return (p - a).norm_sq()
    if t >= 1:
        return (p - b).norm_sq()
    return (p - (a + ab.scale(t))).norm_sq()


def sin_sq_between(u: Vec2, v: Vec2) -> Scalar:
    """Exact sin^2 of the angle between the lines spanned by u and v."""
    c = u.cross(v)
    return c * c / (u.norm_sq() * v.norm_sq())
