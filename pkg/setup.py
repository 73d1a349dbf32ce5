import os

from setuptools import Extension, setup

extensions = []
if os.path.exists("src/khinlab/_scan.pyx"):
    try:
        from Cython.Build import cythonize

        extensions = cythonize(
            [
                Extension(
                    "khinlab._scan",
                    ["src/khinlab/_scan.pyx"],
                    # Contraction off keeps float semantics identical to the
                    # numpy fallback, so both backends emit the same bytes.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # The package runs on the pure backend when the extension is absent.
        extensions = []

setup(ext_modules=extensions)
