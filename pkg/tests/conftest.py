import pytest

from ternsim.netlist import (build_decoder_1_3, build_decoder_2_9,
                             build_decoder_display, builtin_network)


@pytest.fixture(scope="session")
def d13():
    return build_decoder_1_3()


@pytest.fixture(scope="session")
def d29():
    return build_decoder_2_9()


@pytest.fixture(scope="session")
def display():
    return build_decoder_display()


@pytest.fixture(scope="session")
def d13_network():
    return builtin_network("d13")


@pytest.fixture(scope="session")
def d29_network():
    return builtin_network("d29")


@pytest.fixture(scope="session")
def display_network():
    return builtin_network("display")
