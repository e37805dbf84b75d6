"""Builds the optional compiled simulation kernel; the package works without it."""
import os

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # no compiler: fall back to the numpy kernel
            print(f"warning: compiled kernel not built ({exc}); using the numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); using the numpy fallback")


def extensions():
    if os.environ.get("SWITCHCTRL_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension
    omp = [] if os.environ.get("SWITCHCTRL_NO_OPENMP") else ["-fopenmp"]
    ext = Extension("switchctrl.simulate._ckernel",
                    ["src/switchctrl/simulate/_ckernel.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"] + omp, extra_link_args=omp)
    return cythonize([ext], language_level=3, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
