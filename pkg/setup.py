from setuptools import setup, find_packages

setup(
    name="listing-market",
    version="0.1.0",
    description="Fees, estimation and listing equilibria of a two-platform "
                "Internet auction market",
    packages=find_packages(),
    install_requires=[
        'numpy',
        'Jinja2',
        'tqdm'
    ],
    extras_require={
        "test": ["pytest"]
    },
    package_data={
        "listing_market": ["templates/*"]
    },
    entry_points={
        "console_scripts": [
            "listing-market=listing_market.script:main"
        ]
    }
)
