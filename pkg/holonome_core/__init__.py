#
# Version of the library, and a check that the numerical stack is importable
#

import importlib
import os

__version__ = "0.1.0"

REQUIRED_MODULES = ("numpy", "scipy", "networkx")


def check_dependencies():
    """Make sure the libraries holonome computes with can be imported.
    Prints a helpful error and returns 1 if one is missing, 0 otherwise.
    """
    missing = []
    for name in REQUIRED_MODULES:
        try:
            importlib.import_module(name)
        except ImportError:
            if os.environ.get("HOLONOME_DEBUG_IMPORT") == "1":
                import traceback
                traceback.print_exc()
            missing.append(name)
    if missing:
        print("holonome needs %s to run." % ", ".join(missing))
        print("Run `pip install -e .` from the source directory, or see the README.")
        return 1
    return 0
