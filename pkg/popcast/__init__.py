"""Popularity based bandwidth allocation for broadcast video sessions on a shared wireless link."""
from .errors import *
from .parameters import *
from .allocation import *
from .metrics import *
from .layering import *
from .trace import *
from .scenarios import *
from .simulation import *
from .report import *


def tests():
    """Run the package tests."""
    import pytest
    import pathlib
    import os

    module_path = pathlib.Path(__file__).parent

    args = []
    cwd = os.getcwd()
    try:
        if (module_path / 'tests').exists():
            # tests are inside installed package -> use the bundled config
            os.chdir(module_path)
            args += ['-c', str(module_path / 'tests/local.cfg'), str(module_path)]
        else:
            # tests are in dev environment
            os.chdir(module_path.parent)
        error_code = pytest.main(args)
    finally:
        os.chdir(cwd)

    return error_code or None
