"""Build the optional compiled kernels; the package works without them."""

from setuptools import setup
from setuptools.command.build_ext import build_ext

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:  # pure-Python install
    ext_modules = []
else:
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "nvaxial._core",
                ["src/nvaxial/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )


class OptionalBuildExt(build_ext):
    """Skip the extension instead of failing when no compiler is available."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled kernels not built ({exc}); using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: failed to build {ext.name} ({exc}); using pure-Python fallback")


setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
