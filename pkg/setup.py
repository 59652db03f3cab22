"""A setuptools based setup module.
See:
https://packaging.python.org/en/latest/distributing.html
https://github.com/pypa/sampleproject
"""
from os import path
import pkg_resources
from setuptools import setup, find_packages

pkg_resources.require("setuptools>=39.2")
pkg_resources.require("setuptools_scm")

# *************** Dependencies *********
INSTALL_REQUIRES = ['numpy>=1.17', 'scipy>=1.4', 'autoclass>=2.2', 'pyfields', 'valid8', 'decopatch', 'makefun']
DEPENDENCY_LINKS = []
SETUP_REQUIRES = ['pytest-runner', 'setuptools_scm']
TESTS_REQUIRE = ['pytest', 'hypothesis']
EXTRAS_REQUIRE = {}

# ************** ID card *****************
DISTNAME = 'hprqp'
DESCRIPTION = 'Halpern Peaceman-Rachford solver for convex composite quadratic programs'
LICENSE = 'BSD 3-Clause'
LICENSE_LONG = 'License :: OSI Approved :: BSD License'
KEYWORDS = 'quadratic programming convex optimization QP solver splitting Peaceman-Rachford Halpern restart ' \
           'lasso QAP relaxation QPS MPS benchmark'

here = path.abspath(path.dirname(__file__))
with open(path.join(here, 'docs', 'long_description.md')) as f:
    LONG_DESCRIPTION = f.read()

setup(
    name=DISTNAME,
    description=DESCRIPTION,
    long_description=LONG_DESCRIPTION,
    long_description_content_type='text/markdown',

    # version=VERSION, NOW HANDLED BY GIT

    license=LICENSE,

    # See https://pypi.python.org/pypi?%3Aaction=list_classifiers
    classifiers=[
        'Development Status :: 4 - Beta',

        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',

        LICENSE_LONG,

        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
    ],

    keywords=KEYWORDS,

    packages=find_packages(exclude=['contrib', 'docs', '*tests*']),
    python_requires='>=3.7',

    install_requires=INSTALL_REQUIRES,
    dependency_links=DEPENDENCY_LINKS,

    # we're using git
    use_scm_version={'write_to': '%s/_version.py' % DISTNAME, 'fallback_version': '0.0.0'}, # this provides the version + adds the date if local non-commited changes.
    setup_requires=SETUP_REQUIRES,

    tests_require=TESTS_REQUIRE,
    extras_require=EXTRAS_REQUIRE,

    # IMPORTANT: DO NOT set the `include_package_data` flag !! It triggers inclusion of all git-versioned files
    # see https://github.com/pypa/setuptools_scm/issues/190#issuecomment-351181286
    # include_package_data=True,

    entry_points={
        'console_scripts': [
            'hprqp=hprqp.cli_:main',
        ],
    },

    zip_safe=False,
)
