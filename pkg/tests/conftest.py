import socket

import pytest

from dossier.config import RunConfig, build_runtime, make_context_factory


@pytest.fixture()
def offline_runtime():
    return build_runtime(RunConfig())


@pytest.fixture()
def kras_factory(offline_runtime):
    return make_context_factory(offline_runtime, "KRAS", "pancreatic cancer")


@pytest.fixture()
def no_network(monkeypatch):
    """Any socket connection attempt fails the test."""

    def guard(*args, **kwargs):
        raise AssertionError("network access attempted in offline mode")

    monkeypatch.setattr(socket.socket, "connect", guard)
    monkeypatch.setattr(socket, "create_connection", guard)
    return guard
