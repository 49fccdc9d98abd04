import pytest

from hml.modforms import hecke_eigenforms
from hml.petersson import solve_harmonic_weights


@pytest.fixture(scope="session", autouse=True)
def isolated_cache(tmp_path_factory):
    """Keep every test off the user's real eigenvalue cache."""
    root = tmp_path_factory.mktemp("hml-cache")
    mp = pytest.MonkeyPatch()
    mp.setenv("HML_CACHE_DIR", str(root))
    yield root
    mp.undo()


@pytest.fixture(scope="session")
def basis12():
    return solve_harmonic_weights(12, hecke_eigenforms(12, 200))


@pytest.fixture(scope="session")
def basis24():
    return solve_harmonic_weights(24, hecke_eigenforms(24, 400))
