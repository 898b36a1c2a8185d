"""Builds the _core extension by driving CMake through setuptools.

Install with: pip install -e . --no-build-isolation
"""

import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        # Directory the final traitlab/_core*.so must land in.
        ext_path = Path(self.get_ext_fullpath(ext.name)).resolve()
        ext_dir = ext_path.parent
        ext_dir.mkdir(parents=True, exist_ok=True)

        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve() / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)

        configure = [
            "cmake",
            "-S", str(source_dir),
            "-B", str(build_dir),
            "-DTRAITLAB_WHEEL_BUILD=ON",
            "-DTRAITLAB_BUILD_CLI=OFF",
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={ext_dir}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
        ]
        subprocess.run(configure, check=True)
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core",
             "--parallel"],
            check=True,
        )


setup(
    packages=["traitlab"],
    package_dir={"": "python"},
    ext_modules=[CMakeExtension("traitlab._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
