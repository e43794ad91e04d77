"""Setuptools based setup module."""

from setuptools import setup, find_packages

from sfm_regkit._version import get_versions

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    name='sfm-regkit',
    version=get_versions()['version'],
    description='sfm-regkit - camera registration scoring, view ordering '
    'and pair selection for structure from motion.',
    long_description=long_description,
    long_description_content_type="text/markdown",
    license='LGPL-2.1-or-later',
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Image Recognition',
        'Operating System :: OS Independent',
        'License :: OSI Approved :: GNU Lesser General Public License v2 or later (LGPLv2+)',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
    install_requires=['kim-edn', 'numpy>=1.20', 'scipy>=1.6', 'pandas>=1.5'],
    python_requires='>=3.8',
    include_package_data=True,
    keywords='sfm-regkit structure-from-motion mAA',
    packages=find_packages(exclude=['tests', 'tests.*']),
    entry_points={
        'console_scripts': ['sfm-regkit=sfm_regkit.cli:main'],
    },
)
