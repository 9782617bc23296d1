from setuptools import setup

setup(
    name="gqg-spectral-certifier",
    version="0.1.0",
    packages=[
        'gqg',
        'gqg.api',
        'gqg.models',
        'gqg.services',
        'gqg.repositories',
        'gqg.utils',
    ],
    install_requires=[
        'numpy',
        'scipy>=1.12',
        'pandas',
        'pydantic',
        'structlog',
    ],
    entry_points={
        'console_scripts': ['gqg=gqg.main:main'],
    },
)
