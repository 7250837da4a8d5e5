from setuptools import setup

packages = [
    "tokenmark",
    "tokenmark.core",
    "tokenmark.seeding",
    "tokenmark.embed",
    "tokenmark.detect",
    "tokenmark.channel",
    "tokenmark.radioactivity",
    "tokenmark.stats",
    "tokenmark.utility",
    "tokenmark.cli",
]

setup(
    name = 'tokenmark',
    version = '0.1',
    packages = packages,
    package_dir = dict((p, "src/" + p.replace(".", "/")) for p in packages),
    python_requires = '>=3.9',
    install_requires = [
        'numpy>=1.20',
        'scipy>=1.7',
        'scikit-learn>=1.0',
        'PyYAML>=5.4',
        'tqdm>=4.60',
    ],
    entry_points = {
        'console_scripts': [
            'tokenmark = tokenmark.cli.main_funcs:main',
        ],
    },

    license="MIT license",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Operating System :: POSIX :: Linux",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering :: Image Recognition",
        "Topic :: Scientific/Engineering :: Information Analysis",
        "Topic :: Security :: Cryptography",
    ],
)
