"""
Setup CotLab
"""
import sys
try:
    from setuptools import setup, find_packages
except ImportError:
    raise ImportError("Please install `setuptools`")

if not (sys.version_info[0] == 3 and sys.version_info[1] >= 9):
    raise RuntimeError(
                'cotlab requires Python 3.9 or higher.\n'
                'You are using Python {0}.{1}'.format(
                    sys.version_info[0], sys.version_info[1])
                )

# main setup command
setup(
    name='cotlab',
    version='0.1.0', # Major.Minor.Patch
    author='CotLab developers',
    description='Cotangent sums, the function g and the moments of their limiting law',
    license='Apache-2.0',
    python_requires='>=3.9',
    install_requires=[
        'numpy',
        'scipy',
        'pandas>=1.5',
        'scikit-learn',
        'lmfit',
        'mpmath'
    ],
    extras_require={
        'tests': ['pytest']
    },
    entry_points={
        'console_scripts': [
            'cotlab=cotlab:main',  # To maps "cotlab" command to the main function
        ],
    },
    platforms='any',
    packages=find_packages(exclude=['tests', 'examples', 'examples.*'])
)
