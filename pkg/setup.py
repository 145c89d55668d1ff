import setuptools


setuptools.setup(
    name="ratio-metrology",
    packages=setuptools.find_packages(exclude=["test", "examples*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy",
        "numba",
        "matplotlib",
        "tqdm",
        "omegaconf",
        "joblib",
    ],
    extras_require={"test": ["pytest>=7"]},
)
