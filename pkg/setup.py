from setuptools import find_packages, setup

setup(
    name="seeg_pretrain",
    version="0.1.0",
    description="Self-supervised masked-spectrogram pretraining and decoding for SEEG recordings",
    packages=find_packages(exclude=["tests", "tests.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "scikit-learn",
        "torch",
        "python-dotenv",
        "python-box",
        "pyyaml",
    ],
    entry_points={"console_scripts": ["seeg-pretrain=seeg_pretrain.pipeline.cli:main"]},
)
