"""Domains for reflected diffusion: closures, projections, outward normals.

Supported shapes are the unit-style interval [a, b], the axis-aligned
rectangle [a, b] x [c, d], the disk of given center and radius, and the half
line [0, inf). Each domain knows how to project an exterior point to the
nearest point of its closure (the amount moved is the local-time increment of
the projection scheme), and reports outward unit normals on the boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

#: Points within this distance of the boundary count as boundary points for
#: normal queries and path diagnostics.
TOL_BOUNDARY = 1e-9


def _as_point(q, dim: int) -> np.ndarray:
    p = np.atleast_1d(np.asarray(q, dtype=float))
    if p.shape != (dim,):
        raise ValueError(f"expected a point of dimension {dim}, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class Interval:
    """Closed interval [a, b] with reflecting endpoints."""

    a: float = 0.0
    b: float = 1.0
    kind: ClassVar[str] = "interval"
    dim: ClassVar[int] = 1

    def __post_init__(self) -> None:
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ValueError("interval endpoints must be finite")
        if not self.a < self.b:
            raise ValueError(f"interval needs a < b, got [{self.a}, {self.b}]")

    def contains(self, q, tol: float = 0.0) -> bool:
        (x,) = _as_point(q, 1)
        return self.a - tol <= x <= self.b + tol

    def boundary_distance(self, q) -> float:
        (x,) = _as_point(q, 1)
        if not self.contains(q, tol=TOL_BOUNDARY):
            raise ValueError(f"point {x} lies outside [{self.a}, {self.b}]")
        return max(0.0, min(x - self.a, self.b - x))

    def project_to_closure(self, q) -> tuple[np.ndarray, float]:
        (x,) = _as_point(q, 1)
        y = min(max(x, self.a), self.b)
        return np.array([y]), abs(x - y)

    def outward_normal(self, q, tol: float = TOL_BOUNDARY) -> np.ndarray:
        (x,) = _as_point(q, 1)
        if abs(x - self.a) <= tol:
            return np.array([-1.0])
        if abs(x - self.b) <= tol:
            return np.array([1.0])
        raise ValueError(f"point {x} is not on the boundary of [{self.a}, {self.b}]")

    def project_batch(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out = np.clip(pts, self.a, self.b)
        push = np.abs(pts[:, 0] - out[:, 0])
        return out, push


@dataclass(frozen=True)
class HalfLine:
    """Half line [0, inf) with a reflecting origin."""

    kind: ClassVar[str] = "half_line"
    dim: ClassVar[int] = 1

    def contains(self, q, tol: float = 0.0) -> bool:
        (x,) = _as_point(q, 1)
        return x >= -tol

    def boundary_distance(self, q) -> float:
        (x,) = _as_point(q, 1)
        if x < -TOL_BOUNDARY:
            raise ValueError(f"point {x} lies outside [0, inf)")
        return max(0.0, x)

    def project_to_closure(self, q) -> tuple[np.ndarray, float]:
        (x,) = _as_point(q, 1)
        y = max(x, 0.0)
        return np.array([y]), y - x if x < 0.0 else 0.0

    def outward_normal(self, q, tol: float = TOL_BOUNDARY) -> np.ndarray:
        (x,) = _as_point(q, 1)
        if abs(x) <= tol:
            return np.array([-1.0])
        raise ValueError(f"point {x} is not at the origin")

    def project_batch(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out = np.maximum(pts, 0.0)
        push = out[:, 0] - pts[:, 0]
        return out, push


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [a, b] x [c, d]."""

    a: float = 0.0
    b: float = 1.0
    c: float = 0.0
    d: float = 1.0
    kind: ClassVar[str] = "rectangle"
    dim: ClassVar[int] = 2

    def __post_init__(self) -> None:
        if not all(np.isfinite(v) for v in (self.a, self.b, self.c, self.d)):
            raise ValueError("rectangle corners must be finite")
        if not (self.a < self.b and self.c < self.d):
            raise ValueError("rectangle needs a < b and c < d")

    def contains(self, q, tol: float = 0.0) -> bool:
        x, y = _as_point(q, 2)
        return (self.a - tol <= x <= self.b + tol) and (self.c - tol <= y <= self.d + tol)

    def boundary_distance(self, q) -> float:
        x, y = _as_point(q, 2)
        if not self.contains(q, tol=TOL_BOUNDARY):
            raise ValueError(f"point {(x, y)} lies outside the rectangle")
        return max(0.0, min(x - self.a, self.b - x, y - self.c, self.d - y))

    def project_to_closure(self, q) -> tuple[np.ndarray, float]:
        x, y = _as_point(q, 2)
        px = min(max(x, self.a), self.b)
        py = min(max(y, self.c), self.d)
        out = np.array([px, py])
        return out, float(np.hypot(x - px, y - py))

    def outward_normal(self, q, tol: float = TOL_BOUNDARY) -> np.ndarray:
        x, y = _as_point(q, 2)
        if not self.contains(q, tol=tol):
            raise ValueError(f"point {(x, y)} is not on the rectangle boundary")
        # Nearest face wins; at a corner the tie breaks toward the lower axis
        # (the x-face), a documented convention rather than a geometric fact.
        gaps = np.array([x - self.a, self.b - x, y - self.c, self.d - y])
        normals = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])
        k = int(np.argmin(gaps))
        if gaps[k] > tol:
            raise ValueError(f"point {(x, y)} is not on the rectangle boundary")
        return normals[k]

    def project_batch(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        out = np.empty_like(pts)
        np.clip(pts[:, 0], self.a, self.b, out=out[:, 0])
        np.clip(pts[:, 1], self.c, self.d, out=out[:, 1])
        diff = pts - out
        push = np.hypot(diff[:, 0], diff[:, 1])
        return out, push


@dataclass(frozen=True)
class Disk:
    """Disk of radius r centered at (cx, cy)."""

    cx: float = 0.0
    cy: float = 0.0
    r: float = 1.0
    kind: ClassVar[str] = "disk"
    dim: ClassVar[int] = 2

    def __post_init__(self) -> None:
        if not (np.isfinite(self.cx) and np.isfinite(self.cy) and np.isfinite(self.r)):
            raise ValueError("disk parameters must be finite")
        if self.r <= 0.0:
            raise ValueError(f"disk radius must be positive, got {self.r}")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy])

    def contains(self, q, tol: float = 0.0) -> bool:
        p = _as_point(q, 2)
        return float(np.hypot(*(p - self.center))) <= self.r + tol

    def boundary_distance(self, q) -> float:
        p = _as_point(q, 2)
        rho = float(np.hypot(*(p - self.center)))
        if rho > self.r + TOL_BOUNDARY:
            raise ValueError(f"point {tuple(p)} lies outside the disk")
        return max(0.0, self.r - rho)

    def project_to_closure(self, q) -> tuple[np.ndarray, float]:
        p = _as_point(q, 2)
        v = p - self.center
        rho = float(np.hypot(*v))
        if rho <= self.r:
            return p.copy(), 0.0
        # The center itself has no nearest boundary point; by convention it
        # projects to angle zero. Radial rays are otherwise unambiguous.
        out = self.center + v * (self.r / rho)
        return out, rho - self.r

    def outward_normal(self, q, tol: float = TOL_BOUNDARY) -> np.ndarray:
        p = _as_point(q, 2)
        v = p - self.center
        rho = float(np.hypot(*v))
        if abs(rho - self.r) > tol:
            raise ValueError(f"point {tuple(p)} is not on the circle")
        return v / rho

    def project_batch(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        v = pts - self.center
        rho = np.hypot(v[:, 0], v[:, 1])
        outside = rho > self.r
        out = pts.copy()
        if np.any(outside):
            at_center = outside & (rho == 0.0)
            safe = np.where(rho > 0.0, rho, 1.0)
            scale = self.r / safe
            out[outside] = self.center + v[outside] * scale[outside, None]
            if np.any(at_center):
                out[at_center] = self.center + np.array([self.r, 0.0])
        push = np.where(outside, rho - self.r, 0.0)
        return out, push


Domain = Interval | HalfLine | Rectangle | Disk

_KINDS = {
    "interval": Interval,
    "half_line": HalfLine,
    "rectangle": Rectangle,
    "disk": Disk,
}


def make_domain(kind: str, **params) -> Domain:
    """Build a domain from its config-file description."""
    if kind not in _KINDS:
        raise ValueError(f"unknown domain kind {kind!r}; expected one of {sorted(_KINDS)}")
    try:
        return _KINDS[kind](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for domain kind {kind!r}: {exc}") from None


def domain_to_dict(domain: Domain) -> dict:
    """Config-file description of a domain, inverse of make_domain."""
    out: dict = {"kind": domain.kind}
    if isinstance(domain, Interval):
        out.update(a=domain.a, b=domain.b)
    elif isinstance(domain, Rectangle):
        out.update(a=domain.a, b=domain.b, c=domain.c, d=domain.d)
    elif isinstance(domain, Disk):
        out.update(cx=domain.cx, cy=domain.cy, r=domain.r)
    return out
