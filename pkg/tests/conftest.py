import pytest

from app.core.geometry import build_grid
from app.schemas.core import Domain, Params
from app.schemas.evolution import RunConfig, RunTemplate

# coarse discretizations keep the suite fast; full-resolution runs are marked slow
COARSE_N = 20
COARSE_DT = 4e-4


@pytest.fixture
def slab():
    return Domain.slab()


@pytest.fixture
def disk():
    return Domain.disk()


@pytest.fixture
def coarse_slab_grid(slab):
    return build_grid(slab, COARSE_N)


@pytest.fixture
def coarse_disk_grid(disk):
    return build_grid(disk, COARSE_N)


@pytest.fixture
def coarse_template():
    return RunTemplate(n_interior=COARSE_N, dt=COARSE_DT, max_steps=2_000_000)


@pytest.fixture
def make_config():
    """RunConfig factory on a coarse grid"""

    def factory(domain, lam, delta, n_interior=COARSE_N, dt=COARSE_DT, **kwargs):
        kwargs.setdefault("max_steps", 2_000_000)
        return RunConfig(
            params=Params(lam=lam, delta=delta),
            grid=build_grid(domain, n_interior),
            dt=dt,
            **kwargs,
        )

    return factory


@pytest.fixture
def write_ini(tmp_path):
    def factory(text, name="experiment.ini"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return factory
