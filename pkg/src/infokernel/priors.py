"""Prior laws of market factors and their exponential-tilt transforms.

Every filtering and pricing formula in the package reduces to integrals of

    p(x) * exp(alpha * x - beta * x^2),        beta >= 0,

against the factor's prior density p.  Each prior family evaluates these
natively: exact sums for discrete laws, Gaussian completion for normal
mixtures, trapezoid integration for tabulated densities.  Tilting a prior
returns a posterior in the same family, which keeps filtering closed under
conditioning.

All priors are immutable after construction and safe to share across
threads.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, NumericalError
from .quadrature import DEFAULT_ORDER, _eval_scalar_fn, gauss_hermite, standard_normal_rule

__all__ = [
    "PriorDistribution",
    "DiscretePrior",
    "GaussianMixturePrior",
    "TabulatedPrior",
    "prior_mean",
]

_WEIGHT_TOL = 1e-9
_TABLE_NORM_TOL = 1e-3
# Chunk size for tilt integrals over large batches of alpha values; keeps the
# (batch x grid) work arrays of the tabulated family at a modest size.
_CHUNK = 4096


def _normalize_weights(w: np.ndarray, what: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise DomainError(f"{what} must be nonnegative")
    s = float(w.sum())
    if not math.isfinite(s) or abs(s - 1.0) > _WEIGHT_TOL:
        raise DomainError(f"{what} must sum to 1 (got {s!r})")
    return w / s


class PriorDistribution:
    """Law of a single market factor.

    Subclasses provide the mean, sampling, quadrature points for plain
    expectations, and the tilt integrals used by the filter and the
    change-of-measure density.
    """

    def mean(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def quad_points(self, order: int = DEFAULT_ORDER) -> tuple[np.ndarray, np.ndarray]:
        """Points x_i and weights w_i with E[h(X)] ~= sum w_i h(x_i)."""
        raise NotImplementedError

    def log_tilted_norm(self, alpha, beta: float):
        """log of integral p(x) exp(alpha x - beta x^2) dx, broadcast over alpha."""
        raise NotImplementedError

    def tilted_mean(self, alpha, beta: float):
        """Mean of the tilted (posterior) law, broadcast over alpha."""
        raise NotImplementedError

    def tilted(self, alpha: float, beta: float) -> "PriorDistribution":
        """Posterior law after tilting; same family as the prior."""
        raise NotImplementedError

    def expectation(self, h, order: int = DEFAULT_ORDER) -> float:
        x, w = self.quad_points(order)
        vals = _eval_scalar_fn(h, x)
        if not np.all(np.isfinite(vals)):
            raise NumericalError("expectation integrand non-finite")
        return float(w @ vals)


class DiscretePrior(PriorDistribution):
    """Finitely supported law given as (value, probability) pairs."""

    def __init__(self, points):
        pts = [(float(x), float(w)) for x, w in points]
        if not pts:
            raise DomainError("discrete prior needs at least one point")
        self.xs = np.array([x for x, _ in pts])
        self.ws = _normalize_weights(np.array([w for _, w in pts]), "probabilities")

    def __repr__(self):
        return f"DiscretePrior({list(zip(self.xs, self.ws))!r})"

    def mean(self) -> float:
        return float(self.ws @ self.xs)

    def sample(self, rng, size):
        return rng.choice(self.xs, size=size, p=self.ws)

    def quad_points(self, order=DEFAULT_ORDER):
        return self.xs, self.ws

    def _log_weights(self, alpha, beta):
        alpha = np.asarray(alpha, dtype=float)
        return np.log(self.ws) + alpha[..., None] * self.xs - beta * self.xs**2

    def log_tilted_norm(self, alpha, beta):
        out = logsumexp(self._log_weights(alpha, beta), axis=-1)
        return out if out.ndim else float(out)

    def tilted_mean(self, alpha, beta):
        if beta == 0.0 and np.all(np.asarray(alpha) == 0.0):
            m = self.mean()
            return np.broadcast_to(m, np.shape(alpha)).copy() if np.ndim(alpha) else m
        lw = self._log_weights(alpha, beta)
        p = np.exp(lw - lw.max(axis=-1, keepdims=True))
        p /= p.sum(axis=-1, keepdims=True)
        out = p @ self.xs
        return out if out.ndim else float(out)

    def tilted(self, alpha, beta):
        if alpha == 0.0 and beta == 0.0:
            return self
        lw = self._log_weights(alpha, beta)
        p = np.exp(lw - lw.max())
        p /= p.sum()
        return DiscretePrior(zip(self.xs, p))


class GaussianMixturePrior(PriorDistribution):
    """Mixture of normals given as (mean, stdev, weight) triples.

    Tilting by exp(alpha x - beta x^2) maps each component N(mu, s^2) to
    N(m, 1/A) with A = 1/s^2 + 2 beta and m = (mu/s^2 + alpha)/A, and
    reweights by the component tilt integrals, so the family is closed
    under conditioning.
    """

    def __init__(self, components):
        comps = [(float(m), float(s), float(w)) for m, s, w in components]
        if not comps:
            raise DomainError("mixture prior needs at least one component")
        self.means = np.array([m for m, _, _ in comps])
        self.stdevs = np.array([s for _, s, _ in comps])
        if np.any(self.stdevs <= 0):
            raise DomainError("mixture stdevs must be positive")
        self.ws = _normalize_weights(np.array([w for _, _, w in comps]), "mixture weights")

    def __repr__(self):
        return f"GaussianMixturePrior({list(zip(self.means, self.stdevs, self.ws))!r})"

    def mean(self) -> float:
        return float(self.ws @ self.means)

    def sample(self, rng, size):
        idx = rng.choice(len(self.ws), size=size, p=self.ws)
        return self.means[idx] + self.stdevs[idx] * rng.standard_normal(size)

    def quad_points(self, order=DEFAULT_ORDER):
        z, w = standard_normal_rule(gauss_hermite(order))
        xs = (self.means[:, None] + self.stdevs[:, None] * z).ravel()
        ws = (self.ws[:, None] * w).ravel()
        return xs, ws

    def _component_tilt(self, alpha, beta):
        """Per-component posterior precision A, mean m and log tilt mass."""
        alpha = np.asarray(alpha, dtype=float)[..., None]
        inv_var = 1.0 / self.stdevs**2
        a = inv_var + 2.0 * beta
        m = (self.means * inv_var + alpha) / a
        log_z = (
            -np.log(self.stdevs)
            - 0.5 * np.log(a)
            + 0.5 * a * m**2
            - 0.5 * self.means**2 * inv_var
        )
        return a, m, log_z

    def log_tilted_norm(self, alpha, beta):
        _, _, log_z = self._component_tilt(alpha, beta)
        out = logsumexp(np.log(self.ws) + log_z, axis=-1)
        return out if out.ndim else float(out)

    def tilted_mean(self, alpha, beta):
        if beta == 0.0 and np.all(np.asarray(alpha) == 0.0):
            m = self.mean()
            return np.broadcast_to(m, np.shape(alpha)).copy() if np.ndim(alpha) else m
        _, m, log_z = self._component_tilt(alpha, beta)
        lw = np.log(self.ws) + log_z
        p = np.exp(lw - lw.max(axis=-1, keepdims=True))
        p /= p.sum(axis=-1, keepdims=True)
        out = (p * m).sum(axis=-1)
        return out if out.ndim else float(out)

    def tilted(self, alpha, beta):
        if alpha == 0.0 and beta == 0.0:
            return self
        a, m, log_z = self._component_tilt(alpha, beta)
        lw = np.log(self.ws) + log_z
        p = np.exp(lw - lw.max())
        p /= p.sum()
        return GaussianMixturePrior(zip(m, 1.0 / np.sqrt(a), p))


class TabulatedPrior(PriorDistribution):
    """Density tabulated on a grid, integrated by the trapezoid rule.

    The table is renormalized at construction; a raw trapezoid integral
    further than 1e-3 from 1 is rejected as a bad input table.  The density
    is treated as piecewise linear between grid points, and sampling
    inverts the resulting piecewise-quadratic CDF exactly, so samples and
    integrals refer to the same interpolated law.
    """

    def __init__(self, x, density):
        self._init_table(x, density, check_norm=True)

    def _init_table(self, x, density, check_norm):
        x = np.asarray(x, dtype=float)
        p = np.asarray(density, dtype=float)
        if x.ndim != 1 or x.shape != p.shape or x.size < 2:
            raise DomainError("tabulated prior needs matching 1-D grids of size >= 2")
        if np.any(np.diff(x) <= 0):
            raise DomainError("tabulated grid must be strictly increasing")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DomainError("tabulated density must be finite and nonnegative")
        total = float(np.trapezoid(p, x))
        if check_norm and abs(total - 1.0) > _TABLE_NORM_TOL:
            raise DomainError(f"tabulated density integrates to {total!r}, not 1")
        if total <= 0:
            raise DomainError("tabulated density has zero mass")
        self.x = x
        self.p = p / total
        dx = np.diff(x)
        self._seg_mass = 0.5 * (self.p[:-1] + self.p[1:]) * dx
        self._cum = np.concatenate([[0.0], np.cumsum(self._seg_mass)])

    @classmethod
    def _from_weighted(cls, x, weighted_density):
        self = cls.__new__(cls)
        self._init_table(x, weighted_density, check_norm=False)
        return self

    def __repr__(self):
        return f"TabulatedPrior(n={self.x.size}, support=[{self.x[0]}, {self.x[-1]}])"

    def mean(self) -> float:
        return float(np.trapezoid(self.x * self.p, self.x))

    def sample(self, rng, size):
        u = rng.random(size) * self._cum[-1]
        seg = np.clip(np.searchsorted(self._cum, u, side="right") - 1, 0, len(self._seg_mass) - 1)
        x0, x1 = self.x[seg], self.x[seg + 1]
        p0, p1 = self.p[seg], self.p[seg + 1]
        c = u - self._cum[seg]
        slope = (p1 - p0) / (x1 - x0)
        # solve 0.5*slope*s^2 + p0*s = c on each segment
        with np.errstate(divide="ignore", invalid="ignore"):
            s_lin = c / p0
            disc = np.sqrt(np.maximum(p0**2 + 2.0 * slope * c, 0.0))
            s_quad = (disc - p0) / slope
        s = np.where(np.abs(slope) * (x1 - x0) < 1e-12 * np.maximum(p0, 1e-300), s_lin, s_quad)
        return x0 + np.clip(s, 0.0, x1 - x0)

    def quad_points(self, order=DEFAULT_ORDER):
        dx = np.diff(self.x)
        w = np.zeros_like(self.x)
        w[:-1] += 0.5 * dx
        w[1:] += 0.5 * dx
        return self.x, w * self.p

    def _log_norm_block(self, alpha, beta):
        g = alpha[..., None] * self.x - beta * self.x**2
        m = g.max(axis=-1, keepdims=True)
        vals = self.p * np.exp(g - m)
        return np.log(np.trapezoid(vals, self.x)) + m[..., 0]

    def _tilted_moments(self, alpha, beta):
        """Return (log Z, posterior mean) in chunks to bound memory."""
        alpha = np.asarray(alpha, dtype=float)
        flat = np.atleast_1d(alpha).ravel()
        log_z = np.empty(flat.shape)
        mean = np.empty(flat.shape)
        for lo in range(0, flat.size, _CHUNK):
            a = flat[lo : lo + _CHUNK]
            g = a[:, None] * self.x - beta * self.x**2
            m = g.max(axis=-1, keepdims=True)
            vals = self.p * np.exp(g - m)
            z = np.trapezoid(vals, self.x)
            log_z[lo : lo + a.size] = np.log(z) + m[:, 0]
            mean[lo : lo + a.size] = np.trapezoid(self.x * vals, self.x) / z
        return log_z.reshape(alpha.shape), mean.reshape(alpha.shape)

    def log_tilted_norm(self, alpha, beta):
        out, _ = self._tilted_moments(alpha, beta)
        return out if np.ndim(alpha) else float(out)

    def tilted_mean(self, alpha, beta):
        if beta == 0.0 and np.all(np.asarray(alpha) == 0.0):
            m = self.mean()
            return np.broadcast_to(m, np.shape(alpha)).copy() if np.ndim(alpha) else m
        _, out = self._tilted_moments(alpha, beta)
        return out if np.ndim(alpha) else float(out)

    def tilted(self, alpha, beta):
        if alpha == 0.0 and beta == 0.0:
            return self
        g = alpha * self.x - beta * self.x**2
        g -= g.max()
        return TabulatedPrior._from_weighted(self.x, self.p * np.exp(g))


def prior_mean(p: PriorDistribution) -> float:
    """Mean of a factor under its prior law (the zero-time filter value)."""
    return p.mean()
