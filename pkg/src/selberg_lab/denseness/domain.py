"""Strip, rectangle, tensor Gauss-Legendre grid and polynomial Bergman elements."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as npoly

from ..errors import ConfigError

DEFAULT_ORDER = 48


@dataclass(frozen=True)
class StripConfig:
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if not 0.5 < self.sigma1 < self.sigma2 < 1:
            raise ConfigError(f"need 1/2 < sigma1 < sigma2 < 1, got ({self.sigma1}, {self.sigma2})")

    def check_specs(self, specs) -> None:
        worst = max((s.sigma_m for s in specs), default=0.5)
        if not self.sigma1 > worst:
            raise ConfigError(f"sigma1 = {self.sigma1} must exceed sigma_m = {worst}")


@dataclass(frozen=True)
class RectDomain:
    """[u_lo, u_hi] x [t_lo, t_hi] with closure inside the strip."""

    u_lo: float
    u_hi: float
    t_lo: float
    t_hi: float
    strip: StripConfig | None = None

    def __post_init__(self):
        if not (self.u_lo < self.u_hi and self.t_lo < self.t_hi):
            raise ConfigError("rectangle must have nonempty interior")
        if self.strip is not None and not self.strip.sigma1 < self.u_lo < self.u_hi < self.strip.sigma2:
            raise ConfigError(
                f"rectangle [{self.u_lo}, {self.u_hi}] not inside strip "
                f"({self.strip.sigma1}, {self.strip.sigma2})"
            )

    @property
    def area(self) -> float:
        return (self.u_hi - self.u_lo) * (self.t_hi - self.t_lo)

    @property
    def corners(self) -> np.ndarray:
        """Counter-clockwise, starting at the lower-left corner."""
        return np.array([
            complex(self.u_lo, self.t_lo), complex(self.u_hi, self.t_lo),
            complex(self.u_hi, self.t_hi), complex(self.u_lo, self.t_hi),
        ])

    @property
    def max_modulus(self) -> float:
        """C = max |s| over the closed rectangle (attained at a corner)."""
        return float(np.abs(self.corners).max())

    @property
    def sigma_upper(self) -> float:
        return self.strip.sigma2 if self.strip is not None else self.u_hi

    def contains(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return ((s.real >= self.u_lo) & (s.real <= self.u_hi)
                & (s.imag >= self.t_lo) & (s.imag <= self.t_hi))

    def boundary_points(self, n: int) -> np.ndarray:
        """n points spread along the boundary proportionally to edge length."""
        c = self.corners
        lengths = np.abs(np.roll(c, -1) - c)
        per = np.maximum(1, np.round(n * lengths / lengths.sum()).astype(int))
        out = [c[i] + (c[(i + 1) % 4] - c[i]) * np.arange(k) / k for i, k in enumerate(per)]
        return np.concatenate(out)

    def shrink(self, frac: float) -> "RectDomain":
        du = (self.u_hi - self.u_lo) * frac
        dt = (self.t_hi - self.t_lo) * frac
        return RectDomain(self.u_lo + du, self.u_hi - du, self.t_lo + dt, self.t_hi - dt, self.strip)


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    domain: RectDomain
    order_u: int = DEFAULT_ORDER
    order_t: int = DEFAULT_ORDER
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.order_u < 1 or self.order_t < 1:
            raise ConfigError("quadrature order must be >= 1")
        d = self.domain
        xu, wu = legendre.leggauss(self.order_u)
        xt, wt = legendre.leggauss(self.order_t)
        hu, ht = (d.u_hi - d.u_lo) / 2, (d.t_hi - d.t_lo) / 2
        u = d.u_lo + hu * (xu + 1)
        t = d.t_lo + ht * (xt + 1)
        uu, tt = np.meshgrid(u, t, indexing="ij")
        object.__setattr__(self, "nodes", (uu + 1j * tt).ravel())
        object.__setattr__(self, "weights", np.outer(hu * wu, ht * wt).ravel())

    @property
    def exact_degree(self) -> tuple[int, int]:
        """Per-axis polynomial degree integrated exactly."""
        return 2 * self.order_u - 1, 2 * self.order_t - 1

    def integrate(self, values) -> complex:
        return complex(np.dot(self.weights, values))

    def compatible(self, other: "QuadratureGrid") -> bool:
        return other is self or (
            self.domain == other.domain
            and self.order_u == other.order_u and self.order_t == other.order_t
        )


@dataclass(frozen=True, eq=False)
class BergmanElement:
    """Polynomial sum_k c_k s^k with its values cached on a grid."""

    coefficients: np.ndarray
    grid: QuadratureGrid

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def constant(cls, value: complex, grid: QuadratureGrid) -> "BergmanElement":
        return cls(np.array([value], dtype=complex), grid)

    @classmethod
    def random(cls, grid: QuadratureGrid, degree: int, rng: np.random.Generator,
               scale: float = 1.0) -> "BergmanElement":
        c = rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1)
        return cls(scale * c / np.arange(1, degree + 2), grid)

    @cached_property
    def values(self) -> np.ndarray:
        return self(self.grid.nodes)

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coefficients)

    def __call__(self, s) -> np.ndarray:
        return npoly.polyval(np.asarray(s, dtype=complex), self.coefficients)

    def norm(self) -> float:
        return float(np.sqrt(bergman_inner(self, self, self.grid).real))


def _node_values(f, grid):
    if isinstance(f, BergmanElement):
        if not grid.compatible(f.grid):
            raise ConfigError("element cached on a different grid/domain")
        return f.values
    v = np.asarray(f, dtype=complex)
    if v.shape != grid.nodes.shape:
        raise ConfigError("node-value array does not match grid")
    return v


def bergman_inner(f, g, grid: QuadratureGrid) -> complex:
    """<f, g> = iint_U f conj(g) dsigma dt by tensor Gauss-Legendre."""
    return complex(np.dot(grid.weights, _node_values(f, grid) * np.conj(_node_values(g, grid))))
