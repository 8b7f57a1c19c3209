from __future__ import print_function
from setuptools import setup
import codecs
import os
import re

here = os.path.abspath(os.path.dirname(__file__))


# Get the version number from _version.py
verstrline = open(os.path.join(here, 'qd_relevance', '_version.py'), 'r').readlines()[-1]
vsre = r"^QD_RELEVANCE_VERSION = ['\"]([^'\"]*)['\"]"
mo = re.search(vsre, verstrline)
if mo:
    __version__ = mo.group(1)
else:
    raise RuntimeError('Unable to find version string in "qd_relevance/_version.py".')


def read(*parts):
    # intentionally *not* adding an encoding option to open
    return codecs.open(os.path.join(here, *parts), 'r').read()


long_description = read('README.rst')


setup(
    name='qd-relevance',
    packages=['qd_relevance', 'qd_relevance.utils'],
    keywords=['relevance', 'search', 'ensemble', 'ranking', 'evaluation'],
    version=__version__,
    license='GNU General Public License v3 (GPLv3)',
    # TODO: make requires as reading requirements.txt
    install_requires=['numpy>=1.15.3',
                      'scikit-learn>=0.20.1',
                      'torch>=1.2.0',
                      'httpx>=0.23.0',
                      'fastapi>=0.95.0',
                      'pydantic>=1.10',
                      'uvicorn>=0.20.0',
                      ],
    tests_require=['pytest'],
    description='query-document relevance scoring with a generative / embedding ensemble, '
                'plus the metrics, calibration and tuning needed to deploy it in search',
    long_description=long_description,
    entry_points={
        'console_scripts': [
            'qd_relevance=qd_relevance.qd_relevance:main',
            ],
        },
    platforms='any',
    zip_safe=False,
    include_package_data=True,
    package_data={'qd_relevance': ['templates/*.txt']},
    classifiers=[
        'Programming Language :: Python :: 3',
        'Development Status :: 4 - Beta',
        'Natural Language :: English',
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
        'Operating System :: OS Independent',
        ],
    extras_require={
        'testing': ['pytest'],
      },
)
