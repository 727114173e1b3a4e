import pytest

from vinesim_gym.client import launch_local_server


@pytest.fixture(scope="session")
def sim_server():
    """One fast-mode simulator subprocess shared by the test session."""
    proc, uri = launch_local_server(scenario="vineyard_default", seed=0)
    yield uri
    proc.terminate()
    try:
        proc.wait(timeout=10)
    except Exception:
        proc.kill()
