import numpy as np
import pytest

from hcrow.ensemble import EnsembleSpec, run_ensemble
from hcrow.lattice import LatticeKind, LatticeSpec

REFERENCE_SEED = 2024
REFERENCE_REALIZATIONS = 500


def reference_lattice(kind, **changes):
    spec = LatticeSpec(kind=kind, num_cells=20, hopping=1.0, kappa_ex=0.5, kappa_in=0.1, disorder_std=0.8)
    return spec.replace(**changes) if changes else spec


def gaussian(omega, s, center=0.0):
    return np.exp(-((omega - center) ** 2) / (2 * s * s)).astype(complex)


@pytest.fixture(scope="session")
def reference_runs():
    """Full-size reference ensembles for both lattices, shared by the slow tests."""
    out = {}
    for kind in (LatticeKind.HCROW, LatticeKind.REGULAR_CROW):
        spec = EnsembleSpec(lattice=reference_lattice(kind), realizations=REFERENCE_REALIZATIONS, master_seed=REFERENCE_SEED)
        out[kind] = run_ensemble(spec)
    return out
