"""Build script. The GF(256) kernel extension is optional: if Cython or a C
compiler is unavailable (or CROSSWORD_NO_EXT is set) the package installs
pure-Python only and the numpy fallback is selected at import time."""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler, etc.
            print(f"warning: extension build skipped ({exc}); using pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); using pure-Python kernels")


ext_modules = []
if not os.environ.get("CROSSWORD_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("crossword.erasure._gfcore", ["src/crossword/erasure/_gfcore.pyx"])],
            language_level="3",
        )
    except ImportError:
        print("warning: Cython not available; using pure-Python kernels")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
