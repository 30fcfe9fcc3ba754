import os

import pytest

_FIXTURES = os.path.abspath(
    os.path.join(os.path.dirname(__file__), os.pardir, "fixtures"))


@pytest.fixture(scope="session")
def fixture_dir():
    return _FIXTURES


@pytest.fixture
def fx():
    def path(name):
        return os.path.join(_FIXTURES, name)
    return path


@pytest.fixture
def run_cli(capsys):
    """Invoke the command line entry point; (exit_code, stdout, stderr)."""
    from dpcalc.cli import main

    def run(*argv):
        rc = main([str(a) for a in argv])
        captured = capsys.readouterr()
        return rc, captured.out, captured.err
    return run
