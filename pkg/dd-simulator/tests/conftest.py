"""Shared fixtures for the DD simulator tests."""
import os
import shutil
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "scripts"))

import config  # noqa: E402
from pulses import load_catalog  # noqa: E402
from spinbath import BathSpec, Topology, build_model  # noqa: E402


@pytest.fixture(scope="session")
def chain3():
    """The order-verification bath: chain, M=3, alpha=10."""
    return build_model(BathSpec(Topology.CHAIN, m=3, alpha=10.0))


@pytest.fixture(scope="session")
def chain2():
    return build_model(BathSpec(Topology.CHAIN, m=2, alpha=10.0))


@pytest.fixture(scope="session")
def central3():
    return build_model(BathSpec(Topology.CENTRAL_SPIN, m=3, alpha=10.0))


@pytest.fixture(scope="session")
def reference_shapes():
    """The shipped shapes catalog."""
    return load_catalog()


@pytest.fixture
def catalog_path(tmp_path):
    """A writable copy of the shipped catalog."""
    path = tmp_path / "shapes" / "catalog.json"
    path.parent.mkdir()
    shutil.copy(config.SHAPES_CATALOG, path)
    return path


def _rk4_step(h, psi, dt):
    k1 = -1j * (h @ psi)
    k2 = -1j * (h @ (psi + 0.5 * dt * k1))
    k3 = -1j * (h @ (psi + 0.5 * dt * k2))
    k4 = -1j * (h @ (psi + dt * k3))
    return psi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


@pytest.fixture
def rk4_propagator():
    """Fixed-step 4th-order integrator of i dR/dt = H(t) R over a SegmentList.

    Independent of the eigendecomposition path; steps never cross a segment edge.
    """

    def integrate(segs, model, max_step=1e-6):
        r = np.eye(model.dim, dtype=np.complex128)
        for seg in segs:
            if seg.duration == 0.0:
                continue
            gen = seg.generator(model)
            steps = int(np.ceil(seg.duration / max_step))
            dt = seg.duration / steps
            for _ in range(steps):
                r = _rk4_step(gen, r, dt)
        return r

    return integrate
