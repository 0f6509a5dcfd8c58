"""Shared construction helpers for the test suite."""

import re

from birkhoff_rlc.birkhoff import build_system

from oracles import fixture_text


def with_models(name, models):
    """Fixture text with the named ``model`` lines replaced."""
    text = fixture_text(name)
    for mid, model in models.items():
        line = f"model {mid} {model.family} " + " ".join(repr(float(p)) for p in model.params())
        text, count = re.subn(rf"^model {mid} .*$", line, text, flags=re.M)
        assert count == 1, mid
    return text


def fixture_system(name, models=None, charges=None):
    return build_system(with_models(name, models or {}), charges)
