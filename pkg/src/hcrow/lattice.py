"""Tight-binding lattices for helical (H-CROW) and regular CROW arrays.

Sites of an H-CROW are stored interleaved, ``(a_1, b_1, a_2, b_2, ...)``, so
the Hamiltonian is banded with bandwidth 3. All rates are in units of the
hopping ``J`` unless a different ``hopping`` is given.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .rng import disorder_generator

__all__ = [
    "LatticeKind",
    "Circulation",
    "LatticeSpec",
    "Hamiltonian",
    "DisorderRealization",
    "BandStructure",
    "build_hamiltonian",
    "sample_disorder",
    "band_structure",
    "bloch_bands",
    "bloch_matrix",
    "linearization_defect",
]


class LatticeKind(str, enum.Enum):
    HCROW = "hcrow"
    REGULAR_CROW = "crow"


class Circulation(str, enum.Enum):
    CCW = "ccw"
    CW = "cw"


@dataclass(frozen=True)
class LatticeSpec:
    """Static description of one lattice instance.

    ``num_cells`` counts unit cells for an H-CROW (two rings each) and rings
    for a regular CROW. ``port_offset`` moves the input and output couplers
    inwards by that many cells (0 couples to the first and last cell).
    """

    kind: LatticeKind
    num_cells: int
    hopping: float = 1.0
    kappa_ex: float = 0.5
    kappa_in: float = 0.1
    disorder_std: float = 0.8
    port_offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", LatticeKind(self.kind))
        if int(self.num_cells) != self.num_cells or self.num_cells < 1:
            raise ValueError(f"num_cells must be a positive integer, got {self.num_cells!r}")
        object.__setattr__(self, "num_cells", int(self.num_cells))
        if not self.hopping > 0:
            raise ValueError(f"hopping must be > 0, got {self.hopping!r}")
        for name in ("kappa_ex", "kappa_in", "disorder_std"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if self.port_offset < 0 or 2 * self.port_offset >= self.num_cells + 1:
            raise ValueError(
                f"port_offset={self.port_offset} leaves no room between ports "
                f"for num_cells={self.num_cells}"
            )

    @property
    def dim(self) -> int:
        if self.kind is LatticeKind.HCROW:
            return 2 * self.num_cells
        return self.num_cells

    @property
    def bandwidth(self) -> int:
        return 3 if self.kind is LatticeKind.HCROW else 1

    def site_index(self, cell: int, sublattice: str = "a") -> int:
        """Matrix index of ``sublattice`` in 0-based ``cell``."""
        if not 0 <= cell < self.num_cells:
            raise IndexError(f"cell {cell} outside 0..{self.num_cells - 1}")
        if self.kind is LatticeKind.REGULAR_CROW:
            return cell
        if sublattice not in ("a", "b"):
            raise ValueError(f"unknown sublattice {sublattice!r}")
        return 2 * cell + (sublattice == "b")

    def replace(self, **changes) -> "LatticeSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class DisorderRealization:
    seed: int
    detunings: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.detunings, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "detunings", arr)


@dataclass(frozen=True)
class Hamiltonian:
    """Complex Hermitian matrix of modal detunings for one circulation."""

    matrix: np.ndarray
    circulation: Circulation
    bandwidth: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def banded(self) -> np.ndarray:
        """LAPACK band storage ``ab[u + i - j, j] = H[i, j]`` with l = u = bandwidth."""
        u = self.bandwidth
        n = self.dim
        ab = np.zeros((2 * u + 1, n), dtype=complex)
        for offset in range(-u, u + 1):
            if abs(offset) >= n:
                continue
            diag = np.diagonal(self.matrix, offset)
            if offset >= 0:
                ab[u - offset, offset:] = diag
            else:
                ab[u - offset, : n + offset] = diag
        return ab


def _clean_hcrow(num_cells: int, J: float) -> np.ndarray:
    n = 2 * num_cells
    h = np.zeros((n, n), dtype=complex)
    a = np.arange(num_cells) * 2
    b = a + 1
    h[a, b] = 2 * J
    # a_n^dag a_{n+1}: +iJ, b_n^dag b_{n+1}: -iJ, a_n^dag b_{n+-1}: J
    h[a[:-1], a[1:]] = 1j * J
    h[b[:-1], b[1:]] = -1j * J
    h[a[:-1], b[1:]] = J
    h[a[1:], b[:-1]] = J
    return h + h.conj().T


def _clean_crow(num_sites: int, J: float) -> np.ndarray:
    h = np.zeros((num_sites, num_sites), dtype=complex)
    idx = np.arange(num_sites - 1)
    h[idx, idx + 1] = J
    h[idx + 1, idx] = J
    return h


def build_hamiltonian(
    spec: LatticeSpec,
    circulation: Circulation | str = Circulation.CCW,
    disorder: DisorderRealization | np.ndarray | None = None,
) -> Hamiltonian:
    """Real-space Hamiltonian with open boundaries and optional on-site disorder.

    The clockwise matrix is the complex conjugate of the counter-clockwise
    one; disorder is real, so it enters both circulations identically.
    """
    circulation = Circulation(circulation)
    if spec.kind is LatticeKind.HCROW:
        h = _clean_hcrow(spec.num_cells, spec.hopping)
    else:
        h = _clean_crow(spec.num_cells, spec.hopping)
    if circulation is Circulation.CW:
        h = h.conj()
    if disorder is not None:
        detunings = disorder.detunings if isinstance(disorder, DisorderRealization) else np.asarray(disorder, dtype=float)
        if detunings.shape != (spec.dim,):
            raise ValueError(
                f"disorder vector has shape {detunings.shape}, expected ({spec.dim},)"
            )
        h[np.diag_indices(spec.dim)] += detunings
    return Hamiltonian(h, circulation, spec.bandwidth)


def sample_disorder(spec: LatticeSpec, seed: int) -> DisorderRealization:
    """i.i.d. N(0, U^2) detunings, one per ring, drawn from a Philox stream keyed by ``seed``."""
    if spec.disorder_std == 0:
        return DisorderRealization(seed, np.zeros(spec.dim))
    gen = disorder_generator(seed)
    return DisorderRealization(seed, spec.disorder_std * gen.standard_normal(spec.dim))


@dataclass(frozen=True)
class BandStructure:
    k: np.ndarray
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    velocity_plus: np.ndarray
    velocity_minus: np.ndarray
    kind: LatticeKind = field(default=LatticeKind.HCROW)


def bloch_matrix(k, hopping: float = 1.0, circulation: Circulation | str = Circulation.CCW) -> np.ndarray:
    """2x2 Bloch Hamiltonian ``d_x sigma_x + d_z sigma_z`` of the H-CROW (stacked over ``k``)."""
    k = np.asarray(k, dtype=float)
    dx = 2 * hopping * (1 + np.cos(k))
    dz = -2 * hopping * np.sin(k)
    m = np.zeros(k.shape + (2, 2), dtype=complex)
    m[..., 0, 0] = dz
    m[..., 1, 1] = -dz
    m[..., 0, 1] = dx
    m[..., 1, 0] = dx
    if Circulation(circulation) is Circulation.CW:
        # time reversal maps k -> -k
        m[..., 0, 0] = -dz
        m[..., 1, 1] = dz
    return m


def bloch_bands(k, hopping: float = 1.0, kind: LatticeKind | str = LatticeKind.HCROW):
    """Closed-form bands and group velocities at arbitrary ``k``.

    For the H-CROW, ``omega_plus = 2 sqrt(2) J sqrt(1 + cos k) = 4J |cos(k/2)|``.
    Its derivative jumps at the band center; there the right-sided limit is
    returned, so ``v_plus(pi) = +2J`` and ``v_minus(pi) = -2J``.
    """
    k = np.asarray(k, dtype=float)
    J = hopping
    if LatticeKind(kind) is LatticeKind.REGULAR_CROW:
        w = 2 * J * np.cos(k)
        v = -2 * J * np.sin(k)
        return w, w.copy(), v, v.copy()
    w = 2 * np.sqrt(2) * J * np.sqrt(np.clip(1 + np.cos(k), 0.0, None))
    phase = np.mod(k, 2 * np.pi)
    branch = np.where(phase < np.pi * (1 - 1e-12), -1.0, 1.0)
    v = branch * 2 * J * np.sin(phase / 2)
    return w, -w, v, -v


def band_structure(spec: LatticeSpec, k_points: int) -> BandStructure:
    """Bulk bands on the uniform grid ``k_j = 2 pi j / k_points``.

    Even ``k_points`` puts a grid point exactly on the band center.
    """
    if k_points < 2:
        raise ValueError(f"k_points must be >= 2, got {k_points}")
    k = 2 * np.pi * np.arange(k_points) / k_points
    w_plus, w_minus, v_plus, v_minus = bloch_bands(k, spec.hopping, spec.kind)
    return BandStructure(k, w_plus, w_minus, v_plus, v_minus, spec.kind)


def linearization_defect(spec: LatticeSpec, delta_k: float) -> float:
    """Largest off-diagonal magnitude of the combined (ccw + cw) Bloch matrix at ``k = pi + delta_k``.

    Vanishes at the band center and grows quadratically in ``delta_k``.
    """
    if spec.kind is not LatticeKind.HCROW:
        raise ValueError("linearization_defect is defined for H-CROW lattices only")
    if abs(delta_k) > 0.5:
        raise ValueError(f"|delta_k| must be <= 0.5, got {delta_k}")
    k = np.pi + delta_k
    ccw = bloch_matrix(k, spec.hopping, Circulation.CCW)
    cw = bloch_matrix(k, spec.hopping, Circulation.CW)
    full = np.zeros((4, 4), dtype=complex)
    # basis (cw up, cw down, ccw down, ccw up)
    full[:2, :2] = cw
    full[2:, 2:] = ccw[::-1, ::-1]
    off = full - np.diag(np.diag(full))
    return float(np.max(np.abs(off)))
