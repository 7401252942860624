import pytest

from tempolearn.presets import find_mnist_dir


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "mnist: needs the MNIST IDX files on disk")


@pytest.fixture(scope="session")
def mnist_dir():
    d = find_mnist_dir()
    if d is None:
        pytest.skip("MNIST IDX files not found (TEMPOLEARN_MNIST_DIR or "
                    "./data/mnist)")
    return d
