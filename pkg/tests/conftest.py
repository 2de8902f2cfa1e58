import pytest

from otp_remctl.entropy import SeededSource
from otp_remctl.keystore import charge


@pytest.fixture
def make_pair():
    """Factory for matched (controller, controlee) store pairs."""
    def build(blocks=16, block_size=32, seed=1):
        return charge(SeededSource(seed), block_size, blocks)
    return build
