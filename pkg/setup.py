import os

from setuptools import Extension, setup

# The alignment kernel is optional: without Cython (or with
# ENZOOD_SKIP_EXT=1) the package falls back to the pure-Python
# implementation selected at import time in enzood.seqid.
ext_modules = []
if os.environ.get("ENZOOD_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "enzood._alignment_cy",
                    sources=["src/enzood/_alignment_cy.pyx"],
                )
            ],
            language_level="3",
        )

setup(ext_modules=ext_modules)
