import pytest

from helpers import build_system, foreign_keypair, vendor_keypair


@pytest.fixture(scope="session")
def vendor_key():
    return vendor_keypair()


@pytest.fixture(scope="session")
def foreign_key():
    return foreign_keypair()


@pytest.fixture
def healthy_system(vendor_key):
    return build_system(key=vendor_key)
