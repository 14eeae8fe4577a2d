"""Build the optional compiled kernel.

The Cython extension is best-effort: if Cython is missing or the compiler
fails, the package installs without it and falls back to the numpy kernel.
"""
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernel not built ({exc}); using numpy fallback",
                  file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); using numpy fallback",
                  file=sys.stderr)


# -ffp-contract=off keeps fused multiply-adds out so both backends round identically.
extra_compile_args = [] if sys.platform == "win32" else ["-O2", "-ffp-contract=off"]

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "utileval._kernel",
                ["src/utileval/_kernel.pyx"],
                extra_compile_args=extra_compile_args,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
