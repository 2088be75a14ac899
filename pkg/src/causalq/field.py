"""Free real scalar field on a periodic 1+1D lattice at Courant number one.

Vacuum two-point kernels (Wightman, commutator, retarded Green) come from
mode sums; smeared bilinears are plain Riemann sums over lattice cells.  A
truncated-Fock backend provides the same field content as operators for
non-perturbative checks on a few modes.

The massless theory is treated in the discrete-time convention matched to the
dt = a leapfrog update: phase frequencies Omega_k = |k| and normalization
frequencies sin(|k| a)/a.  With that convention the commutator obeys the
discrete wave recursion exactly, so it vanishes *identically* outside the
slope-1 lattice cone (no 1e-12 tail, true zeros), and the Wightman function
reproduces it through W(x,x') - W(x',x).  The two modes with vanishing
normalization frequency (k = 0 and, for even N, the band edge) are kept only
through their state-independent secular imaginary parts by default; their
infrared-divergent real parts are dropped (`drop_zero_mode`) or regulated by
a fixed wavepacket width (`ir_width`).  Massive kernels use the standard
lattice dispersion; their outside-cone tail is measured, never assumed zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dfield
from math import erf
from typing import Mapping, Sequence

import numpy as np

from .causal import CellRegion, cells
from .config import DEFAULT, Tolerances
from .errors import OutOfWindow, TruncationTooLarge
from .qops import LocalOperator, ProductSpace, dag, embed

__all__ = [
    "FieldModel", "SmearingFn", "FockBackend",
    "wightman", "commutator", "retarded_green",
    "smeared_commutator", "smeared_wightman", "cone_tail",
    "box_smearing", "gaussian_smearing", "point_smearing", "fock_backend",
]

Point = tuple[int, int]


@dataclass(frozen=True, eq=False)
class FieldModel:
    """Periodic lattice model; kernels cached eagerly at construction."""
    mass: float = 0.0
    sites: int = 64
    spacing: float = 1.0
    steps: int | None = None
    drop_zero_mode: bool = True
    ir_width: float = 1.0

    def __post_init__(self):
        if self.sites < 8:
            raise ValueError("need at least 8 sites")
        if self.mass < 0 or self.spacing <= 0:
            raise ValueError("mass must be >= 0 and spacing > 0")
        if self.steps is None:
            object.__setattr__(self, "steps", self.sites)
        if self.steps < 1:
            raise ValueError("time window needs at least one step")
        n, a, m = self.sites, self.spacing, self.mass
        j = np.arange(n)
        jj = np.where(j <= n // 2, j, j - n)
        theta = 2 * np.pi * jj / n               # k a, in (-pi, pi]
        omega = np.sqrt(m ** 2 + (2 / a * np.sin(theta / 2)) ** 2)
        if m == 0:
            phase = np.abs(theta) / a            # Omega_k = |k|
            norm = np.abs(np.sin(theta)) / a     # zero at k=0 and band edge
        else:
            phase = omega
            norm = omega
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "phase_freq", phase)
        object.__setattr__(self, "norm_freq", norm)
        object.__setattr__(self, "_wtab", self._build_wightman_table())
        object.__setattr__(self, "_ctab", self._build_commutator_table())

    @property
    def dt(self) -> float:
        return self.spacing

    def _regular(self) -> np.ndarray:
        return self.norm_freq > 1e-14

    def _build_wightman_table(self) -> np.ndarray:
        """Translation-invariant Wightman part, indexed [dn + steps, ds]."""
        n, a = self.sites, self.spacing
        dns = np.arange(-self.steps, self.steps + 1)
        dss = np.arange(n)
        reg = self._regular()
        amp = np.zeros(n)
        amp[reg] = 1.0 / (2 * self.norm_freq[reg] * n)
        tpart = np.exp(-1j * np.outer(dns * a, self.phase_freq))
        xpart = np.exp(1j * np.outer(self.theta, dss))
        w = (tpart * amp) @ xpart
        if self.mass == 0:
            # state-independent secular parts of the two degenerate modes
            sec = -0.5j * (dns * a) / n
            w += sec[:, None]
            if n % 2 == 0:
                par = np.outer((-1.0) ** dns, (-1.0) ** dss)
                w += (0.5j * (dns * a) / n)[:, None] * par
        return w

    def _build_commutator_table(self) -> np.ndarray:
        """Commutator for dn >= 0, indexed [dn, ds]."""
        n = self.sites
        if self.mass == 0:
            # exact kernel of the dt = a discrete wave recursion
            d = np.zeros((self.steps + 1, n))
            if self.steps >= 1:
                d[1, 0] = 1.0
            for t in range(1, self.steps):
                d[t + 1] = np.roll(d[t], 1) + np.roll(d[t], -1) - d[t - 1]
            return -1j * self.spacing * d
        w = self._wtab
        off = self.steps
        fwd = w[off:, :]
        rev = w[off::-1, :][:, (-np.arange(n)) % n]
        return fwd - rev

    def _check_point(self, x: Point) -> Point:
        try:
            n, s = int(x[0]), int(x[1])
        except (TypeError, IndexError):
            raise OutOfWindow(f"not a lattice point: {x!r}")
        if not (0 <= n <= self.steps) or not (0 <= s < self.sites):
            raise OutOfWindow(
                f"point {x} outside window [0,{self.steps}] x [0,{self.sites})")
        return n, s

    def window_region(self) -> CellRegion:
        return cells(((n, s) for n in range(self.steps + 1)
                      for s in range(self.sites)), period=self.sites)


def wightman(f: FieldModel, x: Point, xp: Point) -> complex:
    """Vacuum W(x, x'); Hermitian under point exchange."""
    n, s = f._check_point(x)
    np_, sp_ = f._check_point(xp)
    dn, ds = n - np_, (s - sp_) % f.sites
    val = complex(f._wtab[dn + f.steps, ds])
    if f.mass == 0 and not f.drop_zero_mode:
        w2 = f.ir_width ** 2
        tt = (n * f.dt) * (np_ * f.dt)
        real = w2 + tt / (4 * w2)
        val += real / f.sites
        if f.sites % 2 == 0:
            val += real * (-1.0) ** (dn + ds) / f.sites
    return val


def commutator(f: FieldModel, x: Point, xp: Point) -> complex:
    """Vacuum <[phi(x), phi(x')]>; purely imaginary, exactly antisymmetric."""
    n, s = f._check_point(x)
    np_, sp_ = f._check_point(xp)
    dn, ds = n - np_, s - sp_
    if dn >= 0:
        return complex(f._ctab[dn, ds % f.sites])
    return -complex(f._ctab[-dn, -ds % f.sites])


def retarded_green(f: FieldModel, x: Point, xp: Point) -> complex:
    """i theta(t - t') <[phi(x), phi(x')]>.

    Normalized so the massless kernel, coarse-grained over neighbouring cells,
    equals +1/2 inside the cone (the d'Alembert propagator value).
    """
    n, _ = f._check_point(x)
    np_, _ = f._check_point(xp)
    if n < np_:
        return 0j
    return 1j * commutator(f, x, xp)


def cone_tail(f: FieldModel) -> float:
    """Largest |commutator| strictly outside the slope-1 cone (periodic)."""
    n = f.sites
    ds = np.arange(n)
    dist = np.minimum(ds, n - ds)
    worst = 0.0
    for dn in range(f.steps + 1):
        out = dist > dn
        if out.any():
            worst = max(worst, float(np.abs(f._ctab[dn, out]).max()))
    return worst


@dataclass(frozen=True, eq=False)
class SmearingFn:
    """Finitely supported real weights on lattice cells."""
    weights: Mapping[Point, float]
    region: CellRegion
    tail_mass: float = 0.0

    def __post_init__(self):
        w = {(int(n), int(s)): float(v) for (n, s), v in self.weights.items()}
        object.__setattr__(self, "weights", w)
        if not w:
            raise ValueError("smearing has no samples")
        extra = {c for c, v in w.items() if v != 0.0} - self.region.cells
        if extra:
            raise ValueError(f"samples outside declared region: {sorted(extra)[:4]}")

    def items(self):
        return self.weights.items()


def box_smearing(f: FieldModel, step_lo: int, step_hi: int,
                 site_lo: int, site_hi: int, amplitude: float = 1.0) -> SmearingFn:
    """Uniform weights on a closed block of cells."""
    pts = [(n, s) for n in range(step_lo, step_hi + 1)
           for s in range(site_lo, site_hi + 1)]
    for p in pts:
        f._check_point(p)
    return SmearingFn({p: amplitude for p in pts}, cells(pts, period=f.sites))


def point_smearing(f: FieldModel, step: int, site: int,
                   amplitude: float = 1.0) -> SmearingFn:
    f._check_point((step, site))
    return SmearingFn({(step, site): amplitude},
                      cells([(step, site)], period=f.sites))


def gaussian_smearing(f: FieldModel, center: Point, sigma_t: float,
                      sigma_x: float, amplitude: float = 1.0,
                      cut: float = 6.0) -> SmearingFn:
    """Separable Gaussian truncated at `cut` sigmas; dropped mass reported."""
    n0, s0 = center
    rt = int(np.ceil(cut * sigma_t))
    rx = int(np.ceil(cut * sigma_x))
    wts = {}
    for n in range(n0 - rt, n0 + rt + 1):
        for s in range(s0 - rx, s0 + rx + 1):
            f._check_point((n, s))
            wts[(n, s)] = amplitude * float(
                np.exp(-((n - n0) ** 2) / (2 * sigma_t ** 2)
                       - ((s - s0) ** 2) / (2 * sigma_x ** 2)))
    captured = erf(cut / np.sqrt(2)) ** 2
    return SmearingFn(wts, cells(wts, period=f.sites), tail_mass=1.0 - captured)


def _mode_kernel(f: FieldModel, modes: Sequence[int],
                 dn: np.ndarray, ds: np.ndarray, kind: str) -> np.ndarray:
    """Mode-restricted Wightman or commutator on arrays of differences."""
    idx = [_mode_index(f, j) for j in modes]
    th = f.theta[idx]
    om = f.phase_freq[idx]
    nm = f.norm_freq[idx]
    if np.any(nm <= 1e-14):
        raise ValueError("mode-restricted kernels exclude degenerate modes")
    a = f.spacing
    ph = np.exp(np.multiply.outer(-1j * dn * a, om)
                + np.multiply.outer(1j * ds, th))
    w = (ph / (2 * nm * f.sites)).sum(axis=-1)
    if kind == "wightman":
        return w
    ph_r = np.exp(np.multiply.outer(1j * dn * a, om)
                  + np.multiply.outer(-1j * ds, th))
    return w - (ph_r / (2 * nm * f.sites)).sum(axis=-1)


def _mode_index(f: FieldModel, j: int) -> int:
    return int(j) % f.sites


def _pair_sum(f: FieldModel, sa: SmearingFn, sb: SmearingFn,
              modes: Sequence[int] | None, kind: str) -> complex:
    vol = f.dt * f.spacing
    pa = list(sa.items())
    pb = list(sb.items())
    dn = np.array([[x[0] - y[0] for (y, _) in pb] for (x, _) in pa])
    ds = np.array([[x[1] - y[1] for (y, _) in pb] for (x, _) in pa])
    wa = np.array([v for _, v in pa])
    wb = np.array([v for _, v in pb])
    if modes is None:
        if kind == "wightman":
            ker = f._wtab[dn + f.steps, ds % f.sites]
        else:
            ker = np.where(dn >= 0,
                           f._ctab[np.abs(dn), ds % f.sites],
                           -f._ctab[np.abs(dn), (-ds) % f.sites])
    else:
        ker = _mode_kernel(f, modes, dn, ds, kind)
    return complex(vol * vol * np.einsum("i,ij,j->", wa, ker, wb))


def smeared_commutator(f: FieldModel, sa: SmearingFn, sb: SmearingFn,
                       modes: Sequence[int] | None = None) -> complex:
    """Double lattice sum of <[phi, phi']> against two real smearings."""
    return _pair_sum(f, sa, sb, modes, "commutator")


def smeared_wightman(f: FieldModel, sa: SmearingFn, sb: SmearingFn,
                     modes: Sequence[int] | None = None) -> complex:
    """Double lattice sum of W against two real smearings."""
    return _pair_sum(f, sa, sb, modes, "wightman")


def _lower(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)


@dataclass(frozen=True, eq=False)
class FockBackend:
    """Truncated multi-mode Fock factor with smeared field operators."""
    field: FieldModel
    modes: tuple[int, ...]
    cutoff: int
    space: ProductSpace = dfield(init=False)

    def __post_init__(self):
        f = self.field
        modes = tuple(int(j) for j in self.modes)
        if len(set(_mode_index(f, j) for j in modes)) != len(modes):
            raise ValueError("duplicate modes")
        if len(modes) > 3 or self.cutoff > 4:
            raise TruncationTooLarge("at most 3 modes and occupation cutoff 4")
        if len(modes) == 0 or self.cutoff < 1:
            raise ValueError("need at least one mode and cutoff >= 1")
        for j in modes:
            if f.norm_freq[_mode_index(f, j)] <= 1e-14:
                raise ValueError(f"mode {j} is degenerate; not representable")
        object.__setattr__(self, "modes", modes)
        sp = ProductSpace(tuple((self.mode_label(j), self.cutoff + 1)
                                for j in modes))
        object.__setattr__(self, "space", sp)

    @staticmethod
    def mode_label(j: int) -> str:
        return f"m{j}"

    @property
    def vacuum(self) -> np.ndarray:
        v = np.zeros(self.space.dim, dtype=complex)
        v[0] = 1.0
        return v

    def annihilation(self, j: int) -> LocalOperator:
        return embed(_lower(self.cutoff + 1), self.mode_label(j), self.space)

    def number(self, j: int) -> LocalOperator:
        low = _lower(self.cutoff + 1)
        return embed(dag(low) @ low, self.mode_label(j), self.space)

    def phi_coeffs(self, x: Point) -> np.ndarray:
        """Per-mode coefficient c_j(x) with phi(x) = sum_j c_j a_j + h.c."""
        f = self.field
        n, s = f._check_point(x)
        idx = [_mode_index(f, j) for j in self.modes]
        th = f.theta[idx]
        om = f.phase_freq[idx]
        nm = f.norm_freq[idx]
        t = n * f.dt
        return np.exp(-1j * om * t + 1j * th * s) / np.sqrt(2 * nm * f.sites)

    def smeared_coeffs(self, sm: SmearingFn) -> np.ndarray:
        vol = self.field.dt * self.field.spacing
        out = np.zeros(len(self.modes), dtype=complex)
        for cell, w in sm.items():
            out += vol * w * self.phi_coeffs(cell)
        return out

    def _from_coeffs(self, coeffs: np.ndarray) -> LocalOperator:
        m = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for c, j in zip(coeffs, self.modes):
            ann = self.annihilation(j).matrix
            m += c * ann + np.conj(c) * dag(ann)
        return LocalOperator(self.space, m)

    def phi_at(self, x: Point) -> LocalOperator:
        return self._from_coeffs(self.phi_coeffs(x))

    def phi_smeared(self, sm: SmearingFn) -> LocalOperator:
        return self._from_coeffs(self.smeared_coeffs(sm))


def fock_backend(f: FieldModel, modes: Sequence[int], cutoff: int) -> FockBackend:
    """Truncated creation/annihilation realization of the selected modes."""
    return FockBackend(f, tuple(modes), cutoff)
