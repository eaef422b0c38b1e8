"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any compilation problem downgrades to a warning
instead of failing the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise continue without it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            warnings.warn(f"compiled kernels skipped ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            warnings.warn(f"compiled kernels skipped ({exc}); using pure-Python fallback")


extensions = []
try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [Extension("gridflex.kernels._core", ["src/gridflex/kernels/_core.pyx"])],
        language_level="3",
    )
except ImportError:
    warnings.warn("Cython not available; installing with pure-Python kernels only")

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
