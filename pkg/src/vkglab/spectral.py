"""Fourier representation of fields on the periodic box [-L, L)^d.

Grid points are ``x_j = -L + j*dx`` with ``dx = 2L/N``.  A field is stored
through the coefficients of

    f(x) = sum_n c_n exp(i k_n . x),     k_n = pi * n / L,

so that the L2 norm over the box is ``(2L)^d * sum |c_n|^2``.  Coefficient
arrays carry a leading component axis: shape ``(m, N, ..., N)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, DimensionError, ResolutionError, SingularSymbolError
from .kernels import det_sum

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class BoxGrid:
    dimension: int
    half_length: float
    points: int

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise DimensionError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        n = self.points
        if n < 8 or n % 2 or n & (n - 1):
            raise DimensionError(f"points per axis must be a power of two >= 8, got {n}")
        if not self.half_length > 0:
            raise DimensionError("half_length must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.points

    @property
    def volume(self) -> float:
        return (2.0 * self.half_length) ** self.dimension

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.dimension

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.points)

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Integer mode numbers in FFT order, Nyquist stored as -N/2."""
        return np.fft.fftfreq(self.points, d=1.0 / self.points).round().astype(np.int64)

    @cached_property
    def k_axis(self) -> np.ndarray:
        return np.pi * self.mode_numbers / self.half_length

    @property
    def k_nyquist(self) -> float:
        return np.pi * (self.points // 2) / self.half_length

    @cached_property
    def k_max(self) -> float:
        """Largest |k| present on the grid."""
        return self.k_nyquist * np.sqrt(self.dimension)

    def mesh(self) -> np.ndarray:
        """Physical coordinates, shape ``(d, N, ..., N)``."""
        return np.stack(np.meshgrid(*([self.axis] * self.dimension), indexing="ij"))

    @cached_property
    def k_vectors(self) -> np.ndarray:
        return np.stack(np.meshgrid(*([self.k_axis] * self.dimension), indexing="ij"))

    @cached_property
    def k_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.k_vectors ** 2, axis=0))

    @cached_property
    def bracket(self) -> np.ndarray:
        """Japanese bracket sqrt(1 + |k|^2) on the grid."""
        return np.sqrt(1.0 + self.k_norm ** 2)

    @cached_property
    def sign_pattern(self) -> np.ndarray:
        # (-1)^(n_1 + ... + n_d) converts between FFT and box-centred phases
        n = np.meshgrid(*([self.mode_numbers] * self.dimension), indexing="ij")
        return np.where(sum(n) % 2 == 0, 1.0, -1.0)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True where any axis sits on the Nyquist mode (its own partner)."""
        ny = self.mode_numbers == -(self.points // 2)
        masks = np.meshgrid(*([ny] * self.dimension), indexing="ij")
        return np.logical_or.reduce(masks)

    @cached_property
    def gradient_symbol(self) -> np.ndarray:
        """i k_j with component j zeroed on its own Nyquist plane, matching the
        derivative of a real field."""
        ny = self.mode_numbers == -(self.points // 2)
        masks = np.meshgrid(*([ny] * self.dimension), indexing="ij")
        return 1j * self.k_vectors * ~np.stack(masks)


def partner(coeffs: np.ndarray, dimension: int) -> np.ndarray:
    """Coefficients re-indexed at -k for every k (last ``dimension`` axes)."""
    axes = tuple(range(coeffs.ndim - dimension, coeffs.ndim))
    return np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)


def hermitian_defect(coeffs: np.ndarray, dimension: int) -> float:
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(coeffs - np.conj(partner(coeffs, dimension)))) / scale)


def hermitian_project(coeffs: np.ndarray, dimension: int) -> np.ndarray:
    return 0.5 * (coeffs + np.conj(partner(coeffs, dimension)))


class SpectralField:
    """Immutable Fourier coefficients of a (scalar or vector) field.

    ``real`` marks fields that represent real functions; their coefficients
    are Hermitian symmetric.  ``vector`` marks ``m = d`` vector fields.
    """

    __slots__ = ("grid", "coeffs", "real", "vector")

    def __init__(self, grid: BoxGrid, coeffs: np.ndarray, real: bool = True, vector: bool = False):
        coeffs = np.array(coeffs, dtype=np.complex128)
        if coeffs.shape == grid.shape:
            coeffs = coeffs[None]
        if coeffs.shape[1:] != grid.shape:
            raise DimensionError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
        if vector and coeffs.shape[0] != grid.dimension:
            raise DimensionError("vector fields need one component per dimension")
        coeffs.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "real", bool(real))
        object.__setattr__(self, "vector", bool(vector))

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    def with_coeffs(self, coeffs, real=None, vector=None) -> "SpectralField":
        return SpectralField(self.grid, coeffs,
                             self.real if real is None else real,
                             self.vector if vector is None else vector)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs, real=self.real and other.real)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _same_grid(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs, real=self.real and other.real)

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, c) -> "SpectralField":
        c = complex(c)
        return self.with_coeffs(self.coeffs * c, real=self.real and c.imag == 0)

    __rmul__ = __mul__

    def conj(self) -> "SpectralField":
        """Complex conjugate of the physical field."""
        return self.with_coeffs(np.conj(partner(self.coeffs, self.grid.dimension)))

    def component(self, i: int) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs[i:i + 1], self.real, vector=False)

    def real_part(self) -> "SpectralField":
        return self.with_coeffs(hermitian_project(self.coeffs, self.grid.dimension), real=True)


def _same_grid(a: SpectralField, b: SpectralField):
    if a.grid != b.grid or a.coeffs.shape != b.coeffs.shape:
        raise DimensionError("fields live on different grids or have different component counts")


def to_spectral(samples: np.ndarray, grid: BoxGrid, vector: bool = False) -> SpectralField:
    """Transform grid samples (shape ``grid.shape`` or ``(m, *grid.shape)``)."""
    samples = np.asarray(samples)
    if samples.shape == grid.shape:
        samples = samples[None]
    if samples.ndim != grid.dimension + 1 or samples.shape[1:] != grid.shape:
        raise DimensionError(f"samples of shape {samples.shape} do not match grid {grid.shape}")
    axes = tuple(range(1, grid.dimension + 1))
    coeffs = np.fft.fftn(samples, axes=axes) * (grid.sign_pattern / grid.points ** grid.dimension)
    real = not np.iscomplexobj(samples)
    if real:
        coeffs = hermitian_project(coeffs, grid.dimension)
    return SpectralField(grid, coeffs, real=real, vector=vector)


def from_spectral(f: SpectralField) -> np.ndarray:
    """Grid samples; real dtype for real fields, squeezed for scalars."""
    grid = f.grid
    axes = tuple(range(1, grid.dimension + 1))
    vals = np.fft.ifftn(f.coeffs * (grid.sign_pattern * grid.points ** grid.dimension), axes=axes)
    if f.real:
        vals = vals.real
    return vals if f.vector or f.components > 1 else vals[0]


def _symbol_values(grid: BoxGrid, symbol) -> np.ndarray:
    vals = symbol(grid.k_vectors) if callable(symbol) else symbol
    return np.asarray(vals, dtype=np.complex128)


def is_real_symbol(grid: BoxGrid, sym: np.ndarray) -> bool:
    """Whether sigma(-k) = conj(sigma(k)) away from the self-paired Nyquist modes."""
    sym = np.broadcast_to(sym, sym.shape[:-grid.dimension] + grid.shape)
    mismatch = np.abs(sym - np.conj(partner(sym, grid.dimension)))
    mismatch = np.where(grid.nyquist_mask, 0.0, mismatch)
    scale = max(float(np.max(np.abs(sym))), 1e-300)
    return bool(np.max(mismatch) <= HERMITIAN_TOL * scale)


def apply_multiplier(f: SpectralField, symbol, vector: bool | None = None) -> SpectralField:
    """Multiply coefficients pointwise by ``symbol(k)``.

    ``symbol`` is an array broadcastable to the coefficient shape, or a callable
    taking the wavenumber mesh ``(d, N, ..., N)``.  A real field stays real when
    the symbol is Hermitian; the output is then projected back onto real
    coefficients, which drops the unpaired Nyquist part of odd symbols.
    """
    sym = _symbol_values(f.grid, symbol)
    if not np.all(np.isfinite(sym)):
        raise SingularSymbolError("multiplier symbol is not finite at some grid wavenumber")
    out = f.coeffs * sym
    real = f.real and is_real_symbol(f.grid, sym)
    if real:
        out = hermitian_project(out, f.grid.dimension)
    if vector is None:
        vector = f.vector and out.shape[0] == f.grid.dimension
    return SpectralField(f.grid, out, real=real, vector=vector)


def gradient(f: SpectralField) -> SpectralField:
    """Gradient of a scalar field as a d-component vector field."""
    if f.components != 1:
        raise DimensionError("gradient expects a scalar field")
    return apply_multiplier(f, 1j * f.grid.k_vectors, vector=True)


def partial(f: SpectralField, orders: Sequence[int]) -> SpectralField:
    """Mixed partial derivative with multi-index ``orders``."""
    if len(orders) != f.grid.dimension:
        raise DimensionError("multi-index length must equal the dimension")
    sym = np.ones(f.grid.shape, dtype=np.complex128)
    for ax, o in enumerate(orders):
        sym = sym * (1j * f.grid.k_vectors[ax]) ** o
    return apply_multiplier(f, sym)


def evaluate_at(f: SpectralField, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant at arbitrary points.

    ``points`` has shape ``(P, d)``; returns ``(P, m)``.  The Nyquist mode is
    evaluated as a cosine so real fields give real values off the grid too.
    """
    grid = f.grid
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != grid.dimension:
        raise DimensionError("points must have shape (P, d)")
    ny = grid.mode_numbers == -(grid.points // 2)
    phases = []
    for ax in range(grid.dimension):
        arg = np.outer(pts[:, ax], grid.k_axis)
        ph = np.exp(1j * arg)
        ph[:, ny] = np.cos(arg[:, ny])
        phases.append(ph)
    c = f.coeffs
    if grid.dimension == 1:
        out = c[:, :] @ phases[0].T
    elif grid.dimension == 2:
        out = np.einsum("mab,pb,pa->mp", c, phases[1], phases[0], optimize=True)
    else:
        out = np.einsum("mabc,pc,pb,pa->mp", c, phases[2], phases[1], phases[0], optimize=True)
    out = out.T
    return out.real if f.real else out


# -- Littlewood-Paley ---------------------------------------------------------

def smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for u <= 0, 1 for u >= 1, and tau(u) + tau(1-u) = 1."""
    u = np.asarray(u, dtype=np.float64)
    out = np.where(u >= 1.0, 1.0, 0.0)
    mid = (u > 0.0) & (u < 1.0)
    um = u[mid]
    a = np.exp(-1.0 / um)
    b = np.exp(-1.0 / (1.0 - um))
    out[mid] = a / (a + b)
    return out


def dyadic_bump(kmag: np.ndarray, j: int) -> np.ndarray:
    """Shell profile centred at |k| = 2^j, supported in (2^(j-1), 2^(j+1))."""
    kmag = np.asarray(kmag, dtype=np.float64)
    out = np.zeros_like(kmag)
    pos = kmag > 0
    s = np.log2(kmag[pos]) - j
    out[pos] = smooth_step(1.0 - np.abs(s))
    return out


def low_lump(kmag: np.ndarray) -> np.ndarray:
    """Sum of all shells j <= 0: one on |k| <= 1, zero beyond |k| = 2."""
    kmag = np.asarray(kmag, dtype=np.float64)
    out = np.ones_like(kmag)
    big = kmag > 1.0
    out[big] = smooth_step(1.0 - np.log2(kmag[big]))
    return out


@dataclass(frozen=True)
class DyadicProjector:
    shell: int

    @property
    def support(self) -> tuple[float, float]:
        return 2.0 ** (self.shell - 1), 2.0 ** (self.shell + 1)

    def symbol(self, grid: BoxGrid) -> np.ndarray:
        return dyadic_bump(grid.k_norm, self.shell)

    def check(self, grid: BoxGrid):
        if self.support[0] >= grid.k_max:
            raise ResolutionError(f"shell {self.shell} lies beyond the largest grid wavenumber")

    def __call__(self, f: SpectralField) -> SpectralField:
        self.check(f.grid)
        return apply_multiplier(f, self.symbol(f.grid))


def lp_projector(f: SpectralField, shell: int) -> SpectralField:
    return DyadicProjector(shell)(f)


def low_projector(f: SpectralField) -> SpectralField:
    return apply_multiplier(f, low_lump(f.grid.k_norm))


def shell_range(grid: BoxGrid) -> range:
    """Every shell index whose support meets a nonzero grid wavenumber."""
    kmin = np.pi / grid.half_length
    lo = int(np.floor(np.log2(kmin))) - 1
    hi = int(np.ceil(np.log2(grid.k_max))) + 1
    return range(lo, hi + 1)


def resolved_shells(grid: BoxGrid, start: int = 1) -> list[int]:
    return [j for j in range(start, shell_range(grid).stop) if 2.0 ** (j - 1) < grid.k_max]


def partition_defect(grid: BoxGrid) -> float:
    """Max deviation of sum_j bump_j from 1 over the nonzero grid wavenumbers."""
    kmag = grid.k_norm
    total = sum(dyadic_bump(kmag, j) for j in shell_range(grid))
    pos = kmag > 0
    return float(np.max(np.abs(total[pos] - 1.0)))


def lump_partition_defect(f: SpectralField) -> float:
    """Max-norm relative defect of P_{<=0} f + sum_{j>=1} P_j f against f."""
    total = low_projector(f)
    for j in resolved_shells(f.grid, start=1):
        total = total + lp_projector(f, j)
    ref = np.max(np.abs(f.coeffs))
    return float(np.max(np.abs(total.coeffs - f.coeffs)) / ref) if ref else 0.0


# -- norms --------------------------------------------------------------------

@dataclass(frozen=True)
class NormSpec:
    kind: str                     # "L", "W", "H" or "B"
    p: float = 2.0
    s: float = 0.0
    r: float = 2.0

    def __str__(self):
        fmt = lambda x: "inf" if np.isinf(x) else f"{x:g}"
        if self.kind == "L":
            return f"L{fmt(self.p)}"
        if self.kind == "H":
            return f"H{fmt(self.s)}"
        if self.kind == "W":
            return f"W{fmt(self.s)},{fmt(self.p)}"
        return f"B{fmt(self.s)},{fmt(self.p)},{fmt(self.r)}"


_NUM = r"(inf|[0-9]*\.?[0-9]+)"


def parse_norm(text: str) -> NormSpec:
    """Parse ``L<p>``, ``H<s>``, ``W<s>,<p>`` or ``B<s>,<p>,<r>``."""
    t = text.strip().replace(" ", "")
    val = lambda g: np.inf if g == "inf" else float(g)
    patterns = {
        "L": rf"L{_NUM}$", "H": rf"H{_NUM}$",
        "W": rf"W{_NUM},{_NUM}$", "B": rf"B{_NUM},{_NUM},{_NUM}$",
    }
    m = re.match(patterns.get(t[:1], "$^"), t)
    if not m:
        raise ValueError(f"cannot parse norm specification {text!r}")
    g = [val(x) for x in m.groups()]
    if t[0] == "L":
        spec = NormSpec("L", p=g[0])
    elif t[0] == "H":
        spec = NormSpec("H", p=2.0, s=g[0])
    elif t[0] == "W":
        spec = NormSpec("W", s=g[0], p=g[1])
    else:
        spec = NormSpec("B", s=g[0], p=g[1], r=g[2])
    if spec.p < 1 or spec.r < 1 or spec.s < 0:
        raise ValueError(f"norm parameters out of range in {text!r}")
    if spec.kind == "W" and spec.s != int(spec.s):
        raise ValueError("W^{s,p} needs an integer s")
    return spec


def lp_norm_samples(vals: np.ndarray, p: float, cell_volume: float, components: bool) -> float:
    """Riemann-sum L^p norm of grid samples; vector samples use |.| pointwise."""
    mag = np.abs(vals)
    if components:
        mag = np.sqrt(np.sum(mag ** 2, axis=0))
    if np.isinf(p):
        return float(np.max(mag)) if mag.size else 0.0
    if p == 2:
        return float(np.sqrt(det_sum(mag ** 2) * cell_volume))
    return float((det_sum(mag ** p) * cell_volume) ** (1.0 / p))


def _sample_norm(f: SpectralField, p: float) -> float:
    vals = from_spectral(f)
    multi = f.vector or f.components > 1
    return lp_norm_samples(vals, p, f.grid.cell_volume, multi)


def sobolev_weight_check(f: SpectralField, s: float, tail_tol: float = 1e-6):
    """Raise if the weight <k>^(2s)|c|^2 carries more than ``tail_tol`` of
    its mass in the top third of the spectrum (shells past Nyquist needed)."""
    w = f.grid.bracket ** (2 * s) * np.sum(np.abs(f.coeffs) ** 2, axis=0)
    total = det_sum(w)
    if total == 0:
        return
    tail = det_sum(np.where(f.grid.k_norm > (2.0 / 3.0) * f.grid.k_nyquist, w, 0.0))
    if tail > tail_tol * total:
        raise ResolutionError(f"order s={s:g} is not resolved: tail fraction {tail / total:.2e}")


def norm(f: SpectralField, spec: NormSpec | str, tail_tol: float = 1e-6) -> float:
    """L^p, W^{s,p}, H^s or Besov B^s_{p,r} norm of a field."""
    if isinstance(spec, str):
        spec = parse_norm(spec)
    grid = f.grid
    if spec.kind == "L":
        return _sample_norm(f, spec.p)
    if spec.kind == "H":
        sobolev_weight_check(f, spec.s, tail_tol)
        w = grid.bracket ** (2 * spec.s) * np.abs(f.coeffs) ** 2
        return float(np.sqrt(grid.volume * det_sum(w)))
    if spec.kind == "W":
        order = int(spec.s)
        sobolev_weight_check(f, order, tail_tol)
        total = 0.0
        for multi in _multi_indices(grid.dimension, order):
            total += _sample_norm(partial(f, multi), spec.p)
        return total
    # Besov: the low lump plus 2^{s j} weighted shells j >= 0
    sobolev_weight_check(f, spec.s, tail_tol)
    low = _sample_norm(low_projector(f), spec.p)
    terms = np.array([2.0 ** (spec.s * j) * _sample_norm(lp_projector(f, j), spec.p)
                      for j in resolved_shells(grid, start=0)])
    if np.isinf(spec.r):
        high = float(np.max(terms)) if terms.size else 0.0
    else:
        high = det_sum(terms ** spec.r) ** (1.0 / spec.r)
    return low + high


def _multi_indices(d: int, order: int):
    """All multi-indices with |alpha| <= order, in lexicographic order."""
    import itertools
    for alpha in itertools.product(range(order + 1), repeat=d):
        if sum(alpha) <= order:
            yield alpha


# -- inequality probes -------------------------------------------------------

def bernstein_ratios(h: SpectralField, shell: int) -> dict:
    """Measured constants in the shell Bernstein inequalities.

    ``l2_ratio`` is ||P_j d h||_2 / (2^j ||P_j h||_2), bounded by 2 exactly;
    ``linf_ratio`` is ||P_j d h||_inf / (2^j ||h||_inf).
    """
    pj = lp_projector(h, shell)
    dpj = gradient(pj) if pj.components == 1 else None
    scale = 2.0 ** shell
    denom2 = norm(pj, NormSpec("L", p=2.0))
    num2 = norm(dpj, NormSpec("L", p=2.0))
    numinf = norm(dpj, NormSpec("L", p=np.inf))
    hinf = norm(h, NormSpec("L", p=np.inf))
    return {
        "shell": shell,
        "l2_ratio": num2 / (scale * denom2) if denom2 > 0 else 0.0,
        "linf_ratio": numinf / (scale * hinf) if hinf > 0 else 0.0,
    }


def multiplier_bound(f: SpectralField, symbol, p: float) -> float:
    """Measured ||sigma(i d) f||_p / ||f||_p."""
    den = norm(f, NormSpec("L", p=p))
    if den == 0:
        raise DegenerateInputError("zero input field")
    return norm(apply_multiplier(f, symbol), NormSpec("L", p=p)) / den


def interpolation_check(f: SpectralField, beta: Sequence[int], alpha_order: int) -> float:
    """Ratio ||d^beta f||_inf / (||f||_inf^(1-b/a) ||f||_{H^(2+a)}^(b/a)).

    ``beta`` is a multi-index, ``alpha_order`` the top order a >= |beta|.
    """
    b = sum(beta)
    if alpha_order <= 0 or b > alpha_order:
        raise ValueError("need 0 <= |beta| <= |alpha| with |alpha| >= 1")
    finf = norm(f, NormSpec("L", p=np.inf))
    if finf == 0:
        raise DegenerateInputError("interpolation ratio undefined for the zero field")
    theta = b / alpha_order
    hs = norm(f, NormSpec("H", s=2.0 + alpha_order), tail_tol=1.0)
    num = norm(partial(f, beta), NormSpec("L", p=np.inf))
    return num / (finf ** (1.0 - theta) * hs ** theta)
