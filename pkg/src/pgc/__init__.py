"""Three-party secure computation with garbled circuits whose wire values
survive across executions.

Import surface: build programs with :mod:`pgc.programs`, run them through the
engines in :mod:`pgc.engine`, or serve the map gateway in
:mod:`pgc.friendfinder`.
"""

__version__ = "0.1.0"
