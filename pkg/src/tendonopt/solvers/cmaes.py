"""Covariance matrix adaptation evolution strategy with box and catalog handling.

Standard (mu/mu_w, lambda) strategy with cumulative step-size adaptation and
rank-1 plus rank-mu covariance updates. Box constraints are enforced by
resampling out-of-box candidates (up to 100 draws, then coordinate clamping).
Dimensions tied to a discrete catalog keep a continuous genotype; candidates
are decoded to the nearest catalog value before evaluation and the reported
optimum is decoded the same way. Runs are bit-reproducible for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np


@dataclass
class CmaesSettings:
    x0: np.ndarray
    sigma0: float | None = None  # default 0.3 * max box width
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    catalogs: Mapping[int, np.ndarray] = field(default_factory=dict)  # dim -> values
    population: int | None = None
    ftol: float = 1e-9
    max_evals: int = 100000
    seed: int = 0

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float).ravel()
        n = self.x0.shape[0]
        self.lower = (
            np.full(n, -np.inf) if self.lower is None
            else np.asarray(self.lower, dtype=float).ravel()
        )
        self.upper = (
            np.full(n, np.inf) if self.upper is None
            else np.asarray(self.upper, dtype=float).ravel()
        )
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("box bounds must match the dimension of x0")
        if np.any(self.lower > self.upper):
            raise ValueError("empty bounds box")
        if np.any(self.x0 < self.lower - 1e-12) or np.any(self.x0 > self.upper + 1e-12):
            raise ValueError("x0 outside the bounds box")
        self.catalogs = {
            int(k): np.sort(np.asarray(v, dtype=float).ravel())
            for k, v in self.catalogs.items()
        }
        for k, cat in self.catalogs.items():
            if cat.size == 0:
                raise ValueError(f"empty catalog for dimension {k}")
        if self.sigma0 is not None and self.sigma0 <= 0:
            raise ValueError("sigma0 must be > 0")


@dataclass
class CmaesResult:
    x: np.ndarray  # decoded optimum
    fun: float
    evals: int
    generations: int
    converged: bool


def decode_catalogs(x: np.ndarray, catalogs: Mapping[int, np.ndarray]) -> np.ndarray:
    """Map each catalog dimension to its nearest catalog value."""
    out = np.array(x, dtype=float)
    for dim, cat in catalogs.items():
        out[dim] = cat[int(np.argmin(np.abs(cat - out[dim])))]
    return out


def cmaes_minimize(f: Callable[[np.ndarray], float], settings: CmaesSettings) -> CmaesResult:
    """Minimize f over the box; catalog dimensions are searched by index.

    Internally a catalog dimension's genotype is the (continuous) catalog
    index, rounded to the nearest member before evaluation. That gives every
    member an equal share of the search box regardless of how the values are
    spaced, which is how integer handling behaves.
    """
    n = settings.x0.shape[0]
    lower = settings.lower.copy()
    upper = settings.upper.copy()
    x_start = settings.x0.copy()
    catalogs = settings.catalogs
    for d, cat in catalogs.items():
        lower[d] = -0.49
        upper[d] = len(cat) - 0.51
        x_start[d] = float(np.argmin(np.abs(cat - settings.x0[d])))

    def decode(x: np.ndarray) -> np.ndarray:
        out = np.array(x, dtype=float)
        for d, cat in catalogs.items():
            idx = int(np.clip(np.rint(x[d]), 0, len(cat) - 1))
            out[d] = cat[idx]
        return out

    bounded = np.isfinite(lower) & np.isfinite(upper)
    width = np.where(bounded, upper - lower, np.nan)
    frozen = bounded & (width <= 1e-15)

    if frozen.all():
        x = decode(x_start)
        return CmaesResult(x=x, fun=float(f(x)), evals=1, generations=0, converged=True)

    max_width = float(np.max(width[bounded & ~frozen])) if np.any(bounded & ~frozen) else 1.0
    sigma = settings.sigma0
    if sigma is None:
        sigma = 0.3 * max_width

    lam = settings.population or (4 + int(3 * math.log(n)))
    lam = max(lam, 4)
    mu = lam // 2
    raw = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
    weights = raw / raw.sum()
    mueff = 1.0 / float(np.sum(weights**2))
    cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
    cs = (mueff + 2) / (n + mueff + 5)
    c1 = 2 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
    damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + cs
    chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))

    rng = np.random.default_rng(settings.seed)
    mean = x_start
    mean[frozen] = lower[frozen]
    # narrow box dimensions start with proportionally narrow sampling
    scale = np.where(bounded & ~frozen, width / max_width, 1.0)
    C = np.diag(scale**2)
    ps = np.zeros(n)
    pc = np.zeros(n)

    best_x = decode(mean)
    best_f = math.inf
    evals = 0
    gen = 0
    hist: list[float] = []
    window = 10 + int(math.ceil(30.0 * n / lam))
    converged = False

    while evals < settings.max_evals:
        gen += 1
        C = 0.5 * (C + C.T)
        eigval, eigvec = np.linalg.eigh(C)
        eigval = np.maximum(eigval, 1e-20)
        sqrt_c = eigvec * np.sqrt(eigval)
        inv_sqrt_c = (eigvec / np.sqrt(eigval)) @ eigvec.T

        xs = np.empty((lam, n))
        ys = np.empty((lam, n))
        for k in range(lam):
            for _ in range(100):
                y = sqrt_c @ rng.standard_normal(n)
                x = mean + sigma * y
                x[frozen] = lower[frozen]
                if np.all(x >= lower - 1e-12) and np.all(x <= upper + 1e-12):
                    break
            else:
                x = np.clip(x, lower, upper)
                y = (x - mean) / sigma
            xs[k] = x
            ys[k] = y
        fvals = np.array([f(decode(xs[k])) for k in range(lam)])
        evals += lam
        order = np.argsort(fvals, kind="stable")
        if fvals[order[0]] < best_f:
            best_f = float(fvals[order[0]])
            best_x = decode(xs[order[0]])

        y_sel = ys[order[:mu]]
        y_w = weights @ y_sel
        mean = mean + sigma * y_w
        mean = np.clip(mean, lower, upper)

        ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (inv_sqrt_c @ y_w)
        ps_norm = float(np.linalg.norm(ps))
        hsig = ps_norm / math.sqrt(1 - (1 - cs) ** (2 * gen)) / chi_n < 1.4 + 2 / (n + 1)
        pc = (1 - cc) * pc + hsig * math.sqrt(cc * (2 - cc) * mueff) * y_w
        rank1 = np.outer(pc, pc)
        rank_mu = (y_sel * weights[:, None]).T @ y_sel
        delta_hsig = (1 - hsig) * cc * (2 - cc)
        C = (1 - c1 - cmu) * C + c1 * (rank1 + delta_hsig * C) + cmu * rank_mu
        sigma *= math.exp((cs / damps) * (ps_norm / chi_n - 1))

        hist.append(float(fvals[order[0]]))
        if len(hist) >= window:
            recent = hist[-window:]
            spread = max(recent) - min(recent)
            gen_spread = float(fvals[order[-1]] - fvals[order[0]])
            if spread <= settings.ftol and gen_spread <= settings.ftol:
                converged = True
                break
        if sigma * math.sqrt(float(np.max(eigval))) < 1e-14:
            converged = True
            break

    return CmaesResult(
        x=best_x, fun=best_f, evals=evals, generations=gen, converged=converged
    )
