from setuptools import setup, find_packages


with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()


dev_requires = [
    "black<=21.12b0",
    "coverage<=6.2",
    "mock>=4.0.3",
    "pytest>=7.0",
    "scikit-learn>=0.24.1",
]
install_requires = [
    "numpy>=1.20",
    "pytablewriter==0.58.0",
    "tqdm",
]
dependency_links = []


setup(
    name="opt_synth",
    version="0.1.0",
    description="Optimal synthesis of trajectory-labeling and trajectory-query "
    "programs with A* search over abstractly interpreted partial programs",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*"]),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
    install_requires=install_requires,
    dependency_links=dependency_links,
    extras_require={"dev": dev_requires},
)
