from setuptools import setup, find_packages

setup(
    name="nctf-dereverb",
    version="0.1.0",
    description="Blind single-channel speech dereverberation with N-CTF and NMF",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.24.0",
        "scipy>=1.10.0",
        "pandas>=2.0.0",
        "soundfile>=0.12.1",
        "pydantic>=2.0.0",
        "pydantic-settings>=2.0.0",
        "python-dotenv>=1.0.0",
        "psutil>=5.9.0",
        "matplotlib>=3.7.0",
        "rich>=13.0.0",
    ],
    entry_points={
        "console_scripts": [
            "nctf-dereverb=src.cli.main:main",
        ],
    },
)
