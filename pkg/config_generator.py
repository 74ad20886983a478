"""Configuration generator for the Lyapunov toolkit"""

from typing import Dict, List

import yaml

EXAMPLE_MODELS: Dict[str, dict] = {
    "GibbsAffine": {
        "variant": "GibbsAffine",
        "V": [0.0, 0.0],
        "W": [[0.0, 1.0], [1.0, 0.0]],
        "beta": 2.0,
    },
    "SlowAdaptation": {
        "variant": "SlowAdaptation",
        "base": {"variant": "GibbsAffine", "V": [0.0, 0.0], "W": [[0.0, 1.0], [1.0, 0.0]], "beta": 2.0},
        "pi_star": [0.5, 0.5],
        "lambda": 0.25,
    },
    "BirthDeathPhiPsi": {
        "variant": "BirthDeathPhiPsi",
        "psi": ["1 + r1", "2 - r3"],
        "phi": ["1 + w", "1 + 2*w", "2 + w"],
    },
    "MetropolisGGibbs": {
        "variant": "MetropolisGGibbs",
        "K": ["r2", "r1 + r3", "r2"],
        "R": ["w", "2*w", "w**2"],
    },
    "ThreeStateB": {
        "variant": "ThreeStateB",
        "a1": 1.0, "a2": 1.0, "b2": 1.0, "b3": 1.0,
        "kappa": 1.0,
        "c": [0.0, 1.0, 1.0],
    },
    "ThreeStateNonGibbs": {
        "variant": "ThreeStateNonGibbs",
        "a1": 1.0, "a2": 2.0, "b2": 1.0, "b3": 1.5,
        "kappa": 0.5,
        "c": [0.0, 1.0, 1.0],
    },
    "NearestNeighborCost": {
        "variant": "NearestNeighborCost",
        "a": ["1 + w", "2 - w"],
        "b": ["1 + w**2", "1.5"],
    },
    "Telecom": {
        "variant": "Telecom",
        "C": 3,
        "lambdas": [1.0, 0.5],
        "mus": [1.0, 1.0],
        "gammas": [0.5, 0.3],
        "A": [1, 2],
    },
    "NonLocallyGibbs": {
        "variant": "NonLocallyGibbs",
        "a1": "0.3 + 0.2*r1",
        "a2": "0.4 + 0.2*r2",
        "psi": "0.5 + 0.3*w",
    },
    "Linear": {
        "variant": "Linear",
        "gamma": [[-1.0, 1.0], [1.0, -1.0]],
    },
}


def variants() -> List[str]:
    return list(EXAMPLE_MODELS)


def default_config(variant: str = "GibbsAffine") -> dict:
    """A runnable experiment document for one model variant"""
    if variant not in EXAMPLE_MODELS:
        raise ValueError(f"Unknown model variant '{variant}'")
    return {
        "schema_version": "1",
        "model": EXAMPLE_MODELS[variant],
        "seed": 0,
        "output_dir": "out",
        "tolerance_profile": "strict",
        "ode": {"p0": None, "t_end": 20.0, "dt": 1e-3},
        "fixed_points": {"multistarts": 20},
        "descent": {"starts": 20, "dt": 1e-3, "t_end": 20.0, "eps": 1e-4, "stride": 10,
                    "candidate": {"kind": "model"}},
        "subsolution": {"grid": {"min_points": 200, "margin": 0.02}, "candidate": {"kind": "model"}},
        "duality": {"samples": 50, "primal_samples": 25},
        "finite_n": {"n": 50, "t": 1.0, "initial": {"kind": "point"}},
        "particles": {"n": 1000, "replicas": 100, "t_end": 2.0, "initial": {"kind": "iid"}},
    }


def generate_default_config(output_path="config.yaml", variant: str = "GibbsAffine"):
    """Generate a default configuration file"""
    config = default_config(variant)

    with open(output_path, 'w') as f:
        yaml.dump(config, f, default_flow_style=False, sort_keys=False)
