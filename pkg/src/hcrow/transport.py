"""Steady-state input-output solver for driven, lossy lattices.

For each probe frequency the intra-cavity amplitudes ``x`` solve

    (-i omega + i H + K) x = sqrt(2 kappa_ex) * e_drive,

with ``K`` diagonal: ``kappa_in`` on every ring plus ``kappa_ex`` on the
drive and readout rings. The output field is ``p_out = -sqrt(2 kappa_ex)
x_readout`` and the reflected field ``p_in - sqrt(2 kappa_ex) x_drive``.
Time dependence is ``exp(-i omega t)``, so a delayed signal has a phase that
grows with ``omega`` and group delays come out positive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import get_lapack_funcs

from .lattice import Circulation, Hamiltonian, LatticeKind, LatticeSpec

__all__ = [
    "Channel",
    "FrequencyGrid",
    "InputEnvelope",
    "FieldSpectrum",
    "DelayStatistic",
    "port_sites",
    "solve_steady_state",
    "transmission",
    "reflection",
    "transmission_db",
    "group_delay",
    "intensity_profile",
    "sublattice_profiles",
    "DEFAULT_DELAY_FLOOR",
    "DB_FLOOR",
]

DEFAULT_DELAY_FLOOR = 1e-6
# transmissions below this are reported as -300 dB
DB_FLOOR = 1e-30


class Channel(enum.IntEnum):
    """Channel 1 drives the a-sublattice in ccw modes, channel 2 the b-sublattice in cw modes."""

    CHANNEL1 = 1
    CHANNEL2 = 2

    @property
    def sublattice(self) -> str:
        return "a" if self is Channel.CHANNEL1 else "b"

    @property
    def circulation(self) -> Circulation:
        return Circulation.CCW if self is Channel.CHANNEL1 else Circulation.CW


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform, odd-length frequency grid that contains ``omega = 0`` exactly."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.array(self.omega, dtype=float)
        if w.ndim != 1 or w.size < 3 or w.size % 2 == 0:
            raise ValueError("frequency grid needs an odd number (>= 3) of points")
        d = np.diff(w)
        if np.any(d <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if not np.allclose(d, d[0], rtol=1e-9, atol=0):
            raise ValueError("frequency grid must be uniformly spaced")
        if w[w.size // 2] != 0.0:
            raise ValueError("frequency grid must contain omega = 0 at its center")
        w.setflags(write=False)
        object.__setattr__(self, "omega", w)

    @classmethod
    def symmetric(cls, half_width: float = 4.0, count: int = 513) -> "FrequencyGrid":
        if count % 2 == 0:
            raise ValueError(f"count must be odd, got {count}")
        if not half_width > 0:
            raise ValueError(f"half_width must be > 0, got {half_width}")
        m = count // 2
        return cls(half_width * np.arange(-m, m + 1) / m)

    @property
    def count(self) -> int:
        return self.omega.size

    @property
    def spacing(self) -> float:
        return float(self.omega[1] - self.omega[0])

    @property
    def zero_index(self) -> int:
        return self.omega.size // 2

    def index_of(self, omega: float) -> int:
        i = int(np.argmin(np.abs(self.omega - omega)))
        if abs(self.omega[i] - omega) > 1e-9 * self.spacing:
            raise ValueError(f"omega={omega} is not a grid point")
        return i

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        return FrequencyGrid.symmetric(float(self.omega[-1]), factor * (self.count - 1) + 1)


@dataclass(frozen=True)
class InputEnvelope:
    sigma: float
    amplitudes: np.ndarray

    @classmethod
    def gaussian(cls, grid: FrequencyGrid, sigma: float = 0.5) -> "InputEnvelope":
        if not sigma > 0:
            raise ValueError(f"sigma must be > 0, got {sigma}")
        return cls(sigma, np.exp(-grid.omega**2 / (2 * sigma**2)).astype(complex))


@dataclass(frozen=True)
class FieldSpectrum:
    grid: FrequencyGrid
    site_fields: np.ndarray  # (dim, count)
    p_out: np.ndarray
    reflection_amp: np.ndarray
    channel: Channel
    drive_amplitude: complex
    failed: np.ndarray  # bool per omega

    @property
    def num_failed(self) -> int:
        return int(np.count_nonzero(self.failed))


@dataclass(frozen=True)
class DelayStatistic:
    omega: np.ndarray
    tau: np.ndarray  # NaN where invalid
    valid: np.ndarray
    excluded: int

    def at(self, omega: float = 0.0) -> float:
        return float(self.tau[int(np.argmin(np.abs(self.omega - omega)))])


def port_sites(spec: LatticeSpec, channel: Channel | int) -> tuple[int, int]:
    """(drive, readout) matrix indices for ``channel``."""
    channel = Channel(channel)
    first = spec.port_offset
    last = spec.num_cells - 1 - spec.port_offset
    sub = channel.sublattice
    return spec.site_index(first, sub), spec.site_index(last, sub)


def _loss_diagonal(spec: LatticeSpec, drive: int, readout: int) -> np.ndarray:
    k = np.full(spec.dim, spec.kappa_in, dtype=float)
    k[drive] += spec.kappa_ex
    k[readout] += spec.kappa_ex
    return k


def _solve_banded(H: Hamiltonian, k_diag, omega, rhs):
    u = H.bandwidth
    n = H.dim
    band = 1j * H.banded()
    band[u] += k_diag
    # gbsv wants u extra rows on top for fill-in
    ab = np.zeros((3 * u + 1, n), dtype=complex)
    ab[u:] = band
    (gbsv,) = get_lapack_funcs(("gbsv",), (ab,))
    x = np.full((omega.size, n), np.nan + 0j)
    failed = np.zeros(omega.size, dtype=bool)
    main = 2 * u
    for i, w in enumerate(omega):
        a = ab.copy()
        a[main] -= 1j * w
        _, _, sol, info = gbsv(u, u, a, rhs)
        if info != 0:
            failed[i] = True
            continue
        x[i] = sol
    failed |= ~np.all(np.isfinite(x), axis=1)
    x[failed] = np.nan
    return x, failed


def _solve_dense(H: Hamiltonian, k_diag, omega, rhs):
    n = H.dim
    base = 1j * H.matrix + np.diag(k_diag)
    mats = base[None, :, :] - 1j * omega[:, None, None] * np.eye(n)
    b = np.broadcast_to(rhs, (omega.size, n))[..., None]
    try:
        x = np.linalg.solve(mats, b)[..., 0]
        failed = ~np.all(np.isfinite(x), axis=1)
    except np.linalg.LinAlgError:
        x = np.full((omega.size, n), np.nan + 0j)
        failed = np.zeros(omega.size, dtype=bool)
        for i in range(omega.size):
            try:
                x[i] = np.linalg.solve(mats[i], rhs)
            except np.linalg.LinAlgError:
                failed[i] = True
        failed |= ~np.all(np.isfinite(x), axis=1)
    x[failed] = np.nan
    return x, failed


def solve_steady_state(
    H: Hamiltonian,
    spec: LatticeSpec,
    grid: FrequencyGrid,
    channel: Channel | int = Channel.CHANNEL1,
    method: str = "banded",
    drive_amplitude: complex = 1.0,
) -> FieldSpectrum:
    """Steady-state fields for a monochromatic drive at every grid frequency.

    Frequencies where the system matrix is singular are flagged in
    ``FieldSpectrum.failed`` and carry NaN fields.
    """
    channel = Channel(channel)
    if H.dim != spec.dim:
        raise ValueError(f"Hamiltonian has dim {H.dim}, spec expects {spec.dim}")
    if spec.kind is LatticeKind.HCROW and H.circulation is not channel.circulation:
        raise ValueError(
            f"{channel.name} of an H-CROW propagates in {channel.circulation.value} modes, "
            f"got a {H.circulation.value} Hamiltonian"
        )
    drive, readout = port_sites(spec, channel)
    k_diag = _loss_diagonal(spec, drive, readout)
    coupling = np.sqrt(2 * spec.kappa_ex)
    rhs = np.zeros(spec.dim, dtype=complex)
    rhs[drive] = coupling * drive_amplitude
    if method == "banded":
        x, failed = _solve_banded(H, k_diag, grid.omega, rhs)
    elif method == "dense":
        x, failed = _solve_dense(H, k_diag, grid.omega, rhs)
    else:
        raise ValueError(f"unknown method {method!r}")
    p_out = -coupling * x[:, readout]
    refl = drive_amplitude - coupling * x[:, drive]
    return FieldSpectrum(
        grid=grid,
        site_fields=np.ascontiguousarray(x.T),
        p_out=p_out,
        reflection_amp=refl,
        channel=channel,
        drive_amplitude=complex(drive_amplitude),
        failed=failed,
    )


def transmission(fs: FieldSpectrum) -> np.ndarray:
    return np.abs(fs.p_out / fs.drive_amplitude) ** 2


def reflection(fs: FieldSpectrum) -> np.ndarray:
    return np.abs(fs.reflection_amp / fs.drive_amplitude) ** 2


def transmission_db(t) -> np.ndarray:
    return 10 * np.log10(np.maximum(t, DB_FLOOR))


def group_delay(fs: FieldSpectrum, floor: float = DEFAULT_DELAY_FLOOR) -> DelayStatistic:
    """Group delay ``d(arg p_out)/d omega`` from the unwrapped output phase.

    Points whose stencil touches an amplitude below ``floor * max|p_out|``
    (or a failed solve) are invalid and excluded.
    """
    w = fs.grid.omega
    amp = np.abs(fs.p_out)
    peak = np.nanmax(amp) if np.any(np.isfinite(amp)) else 0.0
    ok = np.isfinite(amp) & (amp >= floor * peak) & (amp > 0)
    phase = np.unwrap(np.angle(np.where(ok, fs.p_out, 1.0)))
    tau = np.gradient(phase, w)
    valid = ok.copy()
    valid[1:-1] &= ok[:-2] & ok[2:]
    valid[0] &= ok[1]
    valid[-1] &= ok[-2]
    tau = np.where(valid, tau, np.nan)
    return DelayStatistic(w, tau, valid, int(np.count_nonzero(~valid)))


def intensity_profile(fs: FieldSpectrum, omega: float = 0.0) -> np.ndarray:
    """|x|^2 on every ring at a grid frequency, in matrix (site) order."""
    i = fs.grid.index_of(omega)
    return np.abs(fs.site_fields[:, i]) ** 2


def sublattice_profiles(fs: FieldSpectrum, omega: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """(a, b) intensities per unit cell for an interleaved H-CROW field."""
    prof = intensity_profile(fs, omega)
    if prof.size % 2:
        raise ValueError("sublattice_profiles needs an interleaved H-CROW field")
    return prof[0::2], prof[1::2]
