"""Point-cloud corruption benchmark toolkit.

Submodules are imported explicitly (``pccorrupt.corruptions``,
``pccorrupt.augmentation``, ...) so that training-side code never pulls in
the test-time corruption engine by accident.
"""

__version__ = "0.1.0"
