"""Setup configuration for the timechange-cn package"""

from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="timechange-cn",
    version="0.1.0",
    description="Square-root time-changed Crank-Nicolson schemes for the heat and Black-Scholes equations",
    long_description=long_description,
    long_description_content_type="text/markdown",
    package_dir={"": "src"},
    packages=find_packages(where="src"),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    python_requires=">=3.11",
    install_requires=[
        "numpy>=1.26",
        "scipy>=1.11",
        "pydantic>=2.0,<3.0",
        "python-dotenv>=1.0,<2.0",
    ],
    extras_require={
        "dev": [
            "pytest>=9.0",
            "pytest-cov>=7.0",
            "pytest-asyncio>=1.3",
            "hypothesis>=6.90",
            "ruff>=0.1.15",
        ],
    },
    entry_points={
        "console_scripts": ["timechange-cn=timechange_cn.experiments.run:main"],
    },
)
