"""Priors and data generators for the two public/private estimation problems.

Mean estimation: ``mu_priv ~ N(0, sigma^2 I)``, ``v ~ N(0, tau^2/d I)``,
private rows ``~ N(mu_priv, I)`` and public rows ``~ N(mu_priv + v, I)``.

Linear regression: ``beta_priv ~ N(0, I/b)``, ``v ~ N(0, tau^2/d I)``,
covariates ``~ N(0, I)`` and labels ``y_i = x_i . beta + eta_i`` where
``beta`` is ``beta_priv`` for private rows and ``beta_priv + v`` for public
rows.  Private rows always come first.

All randomness flows through :class:`RngSeed`.  A seed is a
``(root_seed, stream_index)`` pair plus an optional tuple of sub-stream keys;
it maps to a Philox counter-based generator through
``numpy.random.SeedSequence(root_seed, spawn_key=(stream_index, *substream))``
and Gaussians are drawn with ``Generator.standard_normal``.  Two seeds that
differ anywhere in that tuple give statistically independent streams.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

import numpy as np

from .errors import ParameterError, ShapeError

__all__ = [
    "RngSeed",
    "MeanModelParams",
    "MeanInstance",
    "MeanDataset",
    "RegModelParams",
    "RegInstance",
    "RegDataset",
    "sample_mean_instance",
    "sample_mean_dataset",
    "sample_reg_instance",
    "sample_reg_dataset",
    "dump_dataset",
    "load_dataset",
]

_U64 = 2**64


@dataclass(frozen=True)
class RngSeed:
    root_seed: int
    stream_index: int = 0
    substream: tuple[int, ...] = ()

    def __post_init__(self):
        for value in (self.root_seed, self.stream_index, *self.substream):
            if not 0 <= int(value) < _U64:
                raise ParameterError(f"seed components must be 64-bit unsigned, got {value}")

    def child(self, *keys: int) -> RngSeed:
        """Return an independent sub-stream keyed by ``keys``."""
        return RngSeed(self.root_seed, self.stream_index, self.substream + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            int(self.root_seed), spawn_key=(int(self.stream_index), *map(int, self.substream))
        )
        return np.random.Generator(np.random.Philox(ss))


def _as_rng(seed: RngSeed | np.random.Generator) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, RngSeed):
        return seed.generator()
    raise TypeError(f"expected RngSeed or numpy Generator, got {type(seed).__name__}")


def _check_counts(d, n, m, tau):
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d}")
    if int(n) != n or int(m) != m or n < 0 or m < 0:
        raise ParameterError(f"n and m must be nonnegative integers, got n={n}, m={m}")
    if n + m < 1:
        raise ParameterError("need at least one sample (n + m >= 1)")
    if not (tau >= 0 and math.isfinite(tau)):
        raise ParameterError(f"tau must be finite and nonnegative, got {tau}")


# -- mean estimation -------------------------------------------------------


@dataclass(frozen=True)
class MeanModelParams:
    """Dimensions and prior scales of the shifted Gaussian mean problem."""

    d: int
    n: int
    m: int
    tau: float = 0.0
    prior_sigma2: float = 1.0

    def __post_init__(self):
        _check_counts(self.d, self.n, self.m, self.tau)
        if not (self.prior_sigma2 > 0 and math.isfinite(self.prior_sigma2)):
            raise ParameterError(f"prior_sigma2 must be positive, got {self.prior_sigma2}")


@dataclass(frozen=True, eq=False)
class MeanInstance:
    mu_priv: np.ndarray
    v: np.ndarray
    mu_pub: np.ndarray

    @property
    def d(self) -> int:
        return self.mu_priv.shape[0]


@dataclass(frozen=True, eq=False)
class MeanDataset:
    x_priv: np.ndarray
    x_pub: np.ndarray

    @property
    def n(self) -> int:
        return self.x_priv.shape[0]

    @property
    def m(self) -> int:
        return self.x_pub.shape[0]

    @property
    def d(self) -> int:
        return self.x_priv.shape[1]

    def rows(self) -> np.ndarray:
        """All rows stacked, private first."""
        return np.vstack([self.x_priv, self.x_pub])

    def replace_row(self, i: int, row: np.ndarray) -> MeanDataset:
        """Copy of the dataset with global row ``i`` (private first) replaced."""
        if not 0 <= i < self.n + self.m:
            raise ParameterError(f"row index {i} out of range for n+m={self.n + self.m}")
        x_priv, x_pub = self.x_priv, self.x_pub
        if i < self.n:
            x_priv = x_priv.copy()
            x_priv[i] = row
        else:
            x_pub = x_pub.copy()
            x_pub[i - self.n] = row
        return MeanDataset(x_priv, x_pub)


def _sample_shift(rng, d, tau):
    # exact zeros at tau = 0, no draw from a degenerate Gaussian
    if tau == 0:
        return np.zeros(d)
    return rng.standard_normal(d) * (tau / math.sqrt(d))


def sample_mean_instance(params: MeanModelParams, seed) -> MeanInstance:
    rng = _as_rng(seed)
    d = params.d
    mu_priv = rng.standard_normal(d) * math.sqrt(params.prior_sigma2)
    v = _sample_shift(rng, d, params.tau)
    return MeanInstance(mu_priv=mu_priv, v=v, mu_pub=mu_priv + v)


def sample_mean_dataset(params: MeanModelParams, instance: MeanInstance, seed) -> MeanDataset:
    if instance.mu_priv.shape != (params.d,) or instance.mu_pub.shape != (params.d,):
        raise ShapeError(f"instance dimension {instance.mu_priv.shape} does not match d={params.d}")
    rng = _as_rng(seed)
    x_priv = instance.mu_priv + rng.standard_normal((params.n, params.d))
    x_pub = instance.mu_pub + rng.standard_normal((params.m, params.d))
    return MeanDataset(x_priv=x_priv, x_pub=x_pub)


# -- linear regression -----------------------------------------------------


@dataclass(frozen=True)
class RegModelParams:
    """Dimensions, shift and noise scales of the shifted regression problem.

    ``noise_sigma2`` is the label-noise variance (also the posterior
    constant ``a``); ``prior_precision_b`` defaults to ``1/d``.
    """

    d: int
    n: int
    m: int
    tau: float = 0.0
    noise_sigma2: float = 1.0
    prior_precision_b: float | None = None

    def __post_init__(self):
        _check_counts(self.d, self.n, self.m, self.tau)
        if not (self.noise_sigma2 > 0 and math.isfinite(self.noise_sigma2)):
            raise ParameterError(f"noise_sigma2 must be positive, got {self.noise_sigma2}")
        if self.prior_precision_b is None:
            object.__setattr__(self, "prior_precision_b", 1.0 / self.d)
        if not (self.prior_precision_b > 0 and math.isfinite(self.prior_precision_b)):
            raise ParameterError(f"prior_precision_b must be positive, got {self.prior_precision_b}")

    @property
    def N(self) -> int:
        return self.n + self.m


@dataclass(frozen=True, eq=False)
class RegInstance:
    beta_priv: np.ndarray
    v: np.ndarray
    beta_pub: np.ndarray


@dataclass(frozen=True, eq=False)
class RegDataset:
    """Stacked design: rows ``[:n]`` private, ``[n:]`` public."""

    x: np.ndarray
    y: np.ndarray
    eta: np.ndarray
    n: int

    @property
    def m(self) -> int:
        return self.x.shape[0] - self.n

    @property
    def d(self) -> int:
        return self.x.shape[1]

    @property
    def x_priv(self) -> np.ndarray:
        return self.x[: self.n]

    @property
    def x_pub(self) -> np.ndarray:
        return self.x[self.n :]

    @property
    def y_priv(self) -> np.ndarray:
        return self.y[: self.n]

    @property
    def y_pub(self) -> np.ndarray:
        return self.y[self.n :]

    def shift_design(self) -> np.ndarray:
        """The N x d matrix P: public covariates, zeros on private rows."""
        p = np.zeros_like(self.x)
        p[self.n :] = self.x_pub
        return p


def sample_reg_instance(params: RegModelParams, seed) -> RegInstance:
    rng = _as_rng(seed)
    d = params.d
    beta_priv = rng.standard_normal(d) / math.sqrt(params.prior_precision_b)
    v = _sample_shift(rng, d, params.tau)
    return RegInstance(beta_priv=beta_priv, v=v, beta_pub=beta_priv + v)


def sample_reg_dataset(params: RegModelParams, instance: RegInstance, seed) -> RegDataset:
    d, n, m = params.d, params.n, params.m
    if instance.beta_priv.shape != (d,) or instance.beta_pub.shape != (d,):
        raise ShapeError(f"instance dimension {instance.beta_priv.shape} does not match d={d}")
    rng = _as_rng(seed)
    x = rng.standard_normal((n + m, d))
    eta = rng.standard_normal(n + m) * math.sqrt(params.noise_sigma2)
    y = np.empty(n + m)
    y[:n] = x[:n] @ instance.beta_priv + eta[:n]
    y[n:] = x[n:] @ instance.beta_pub + eta[n:]
    return RegDataset(x=x, y=y, eta=eta, n=n)


# -- text dump -------------------------------------------------------------

_HEADER = "pubpriv-dataset v1"


def _fmt(row) -> str:
    return " ".join(format(float(v), ".17g") for v in row)


def dump_dataset(ds, params, dest: str | Path | TextIO) -> None:
    """Write ``ds`` in the ``pubpriv-dataset v1`` text format.

    Mean datasets write one line per row (``d`` columns, private rows
    first); regression datasets append the label as column ``d + 1``.
    """
    buf = io.StringIO()
    buf.write(f"{_HEADER}\n{params.d} {params.n} {params.m} {format(float(params.tau), '.17g')}\n")
    if isinstance(ds, MeanDataset):
        for row in ds.rows():
            buf.write(_fmt(row) + "\n")
    elif isinstance(ds, RegDataset):
        for xi, yi in zip(ds.x, ds.y):
            buf.write(_fmt([*xi, yi]) + "\n")
    else:
        raise TypeError(f"cannot dump {type(ds).__name__}")
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(buf.getvalue())
    else:
        dest.write(buf.getvalue())


def load_dataset(src: str | Path | TextIO):
    """Read a dump; returns ``(header_dict, MeanDataset | (x, y))``."""
    text = Path(src).read_text() if isinstance(src, (str, Path)) else src.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != _HEADER:
        raise ParameterError("not a pubpriv-dataset v1 file")
    d_s, n_s, m_s, tau_s = lines[1].split()
    d, n, m, tau = int(d_s), int(n_s), int(m_s), float(tau_s)
    data = [[float(t) for t in ln.split()] for ln in lines[2:] if ln.strip()]
    if len(data) != n + m:
        raise ShapeError(f"expected {n + m} rows, found {len(data)}")
    header = {"d": d, "n": n, "m": m, "tau": tau}
    width = len(data[0]) if data else d
    arr = np.array(data, dtype=float).reshape(n + m, width)
    if width == d:
        return header, MeanDataset(x_priv=arr[:n], x_pub=arr[n:])
    if width == d + 1:
        return header, (arr[:, :d], arr[:, d])
    raise ShapeError(f"rows have {width} columns, expected {d} or {d + 1}")
