"""This module provides NoiseConfig, which handles and validates the device
noise parameters of a configuration file (the nested ``noise`` object).

Angles are stored in degrees as they appear in the file and on the command
line; ``to_noise_model`` converts them to radians once.
"""

import math

from ..quantum_core import optimal_theta
from ..simulator.model import BETA_B, NoiseModel

_NUMBER = (int, float)


class NoiseConfig:
    """
    Handles noise configuration and validation.

    Attributes:
        bell_fidelity (float): Fidelity of the shared Werner state to |phi+>.
        theta_deg (float | None): Measurement basis offset in degrees; None selects the optimum.
        alpha_deg (float): Separation of node A's bases in degrees.
        readout_eg_a (float): p(e|g) of node A.
        readout_ge_a (float): p(g|e) of node A.
        readout_eg_b (float): p(e|g) of node B.
        readout_ge_b (float): p(g|e) of node B.
        drift_amplitude_deg (float): Amplitude of the offset drift in degrees.
        drift_period (int): Period of the offset drift in trials.
        NOISE_SCHEMA (dict): Validation schema for noise configuration keys.
    """

    def __init__(self, noise_dict: dict) -> None:
        """
        Initializes the NoiseConfig object with values from a dictionary.

        Args:
            noise_dict (dict): Dictionary containing noise configuration values.
        """

        self.bell_fidelity: float = noise_dict["bell_fidelity"]
        self.theta_deg: float | None = noise_dict.get("theta_deg")
        self.alpha_deg: float = noise_dict["alpha_deg"]
        self.readout_eg_a: float = noise_dict["readout_eg_a"]
        self.readout_ge_a: float = noise_dict["readout_ge_a"]
        self.readout_eg_b: float = noise_dict["readout_eg_b"]
        self.readout_ge_b: float = noise_dict["readout_ge_b"]
        self.drift_amplitude_deg: float = noise_dict["drift_amplitude_deg"]
        self.drift_period: int = noise_dict["drift_period"]

        self.NOISE_SCHEMA = {
            "bell_fidelity": {"type": _NUMBER, "min": 0.25, "max": 1.0},
            "theta_deg": {"type": _NUMBER, "nullable": True},
            "alpha_deg": {"type": _NUMBER, "min": 0.0, "max": 180.0},
            "readout_eg_a": {"type": _NUMBER, "min": 0.0, "max_exclusive": 0.5},
            "readout_ge_a": {"type": _NUMBER, "min": 0.0, "max_exclusive": 0.5},
            "readout_eg_b": {"type": _NUMBER, "min": 0.0, "max_exclusive": 0.5},
            "readout_ge_b": {"type": _NUMBER, "min": 0.0, "max_exclusive": 0.5},
            "drift_amplitude_deg": {"type": _NUMBER, "min": 0.0, "max": 180.0},
            "drift_period": {"type": int, "min": 1},
        }

        for key in self.NOISE_SCHEMA:
            self.validate(key, getattr(self, key))

    def validate(self, key: str, value) -> None:
        """
        Validates a noise configuration value against its schema.

        Args:
            key (str): The configuration key to validate.
            value: The value to validate.

        Raises:
            KeyError: If the key is not a noise key.
            TypeError: If the value is not of the expected type.
            ValueError: If the value is out of the allowed range.
        """

        if key not in self.NOISE_SCHEMA:
            raise KeyError(key)
        schema = self.NOISE_SCHEMA[key]

        if value is None and schema.get("nullable"):
            return

        # bool is an int subclass but never a valid number here
        if isinstance(value, bool) or not isinstance(value, schema["type"]):
            raise TypeError(f"{key} must be a number, got {value!r}")

        if "min" in schema and value < schema["min"]:
            raise ValueError(f"{key} must be at least {schema['min']}, got {value}")
        if "max" in schema and value > schema["max"]:
            raise ValueError(f"{key} must be at most {schema['max']}, got {value}")
        if "max_exclusive" in schema and value >= schema["max_exclusive"]:
            raise ValueError(f"{key} must be below {schema['max_exclusive']}, got {value}")

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in self.NOISE_SCHEMA}

    def to_noise_model(self) -> NoiseModel:
        """Builds the simulator's NoiseModel, resolving an unset offset to the optimum."""
        alpha = math.radians(self.alpha_deg)
        if self.theta_deg is None:
            theta = optimal_theta(alpha, BETA_B)
        else:
            theta = math.radians(self.theta_deg)
        return NoiseModel(
            bell_fidelity=float(self.bell_fidelity),
            alpha_a=alpha,
            theta_offset=theta,
            readout_eg_a=float(self.readout_eg_a),
            readout_ge_a=float(self.readout_ge_a),
            readout_eg_b=float(self.readout_eg_b),
            readout_ge_b=float(self.readout_ge_b),
            drift_amplitude=math.radians(self.drift_amplitude_deg),
            drift_period=self.drift_period,
        )
