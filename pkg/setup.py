from setuptools import setup


setup(
    name="minicity",
    version="1.0.0",
    author="",
    author_email="",
    description="A small-scale city simulator for mapping and smart intersection experiments.",
    license="MIT",
    keywords="slam lidar occupancy grid v2i intersection simulation",
    packages=['minicity', 'minicity.tests'],
    package_data={'minicity': ['data/*.json']},
    setup_requires=['pytest-runner'],
    install_requires=['matplotlib', 'numpy', 'scipy'],
    tests_require=['pytest'],
    entry_points={'console_scripts': ['minicity=minicity.cli:main']}
)
