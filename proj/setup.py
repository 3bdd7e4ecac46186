"""Build the native extension through CMake so the compiled core has a single
build definition shared with the CLI and tests."""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str, sourcedir: str = "") -> None:
        super().__init__(name, sources=[])
        self.sourcedir = os.fspath(Path(sourcedir).resolve())


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        import pybind11

        extdir = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        build_temp = Path(self.build_temp) / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)

        cmake_args = [
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}{os.sep}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
            "-DCMAKE_BUILD_TYPE=Release",
            "-DWEAKTIES_BUILD_TESTS=OFF",
            "-DWEAKTIES_BUILD_PYTHON=ON",
            "-DWEAKTIES_PYTHON_REQUIRED=ON",
        ]
        subprocess.run(["cmake", ext.sourcedir, *cmake_args], cwd=build_temp, check=True)
        subprocess.run(
            ["cmake", "--build", ".", "--target", "_core"], cwd=build_temp, check=True
        )


setup(
    packages=["weakties"],
    package_dir={"weakties": "python/weakties"},
    ext_modules=[CMakeExtension("weakties._core")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
