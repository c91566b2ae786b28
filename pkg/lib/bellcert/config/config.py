"""This module provides the Config, which encapsulates the configuration
logic of the toolkit. It loads, validates, and updates configuration values
from a JSON file, and turns them into the immutable parameter objects the
simulator, certifier and timing check consume.

Classes:
    Config: Handles loading, validating, and updating configuration values,
        including noise settings.

**Usage:**
```python
config = Config("config.json")
config.update_config("seed", 7, temporary=True)
experiment = config.to_experiment()
```
"""

import copy
import json

from ..error import ConfigError
from ..simulator.model import ExperimentConfig
from ..timing_verifier import SpaceTimeConfig
from .noise import NoiseConfig

_NUMBER = (int, float)

DEFAULT_CONFIG: dict = {
    "n": 1 << 24,
    "block_size": 1 << 20,
    "report_size": 1 << 17,
    "seed": 20150,
    "workers": 1,
    "repetition_rate": 50000.0,
    "conf": 0.99,
    "distance_m": 32.928,
    "duration_ns": 106.7,
    "distance_sigma_ns": 0.01,
    "duration_sigma_ns": 0.3,
    "k_sigma": 3.0,
    "log_level": "INFO",
    "colorized": False,
    "noise": {
        "bell_fidelity": 0.859,
        "theta_deg": None,
        "alpha_deg": 90.0,
        "readout_eg_a": 0.004,
        "readout_ge_a": 0.007,
        "readout_eg_b": 0.010,
        "readout_ge_b": 0.018,
        "drift_amplitude_deg": 0.0,
        "drift_period": 1 << 22,
    },
}
"""Values used for keys a configuration file leaves out."""


def _overlay(json_data: dict, file_data, source: str) -> None:
    if not isinstance(file_data, dict):
        raise ConfigError(f"{source} must hold a JSON object")
    noise = file_data.pop("noise", {})
    if not isinstance(noise, dict):
        raise ConfigError(f"noise in {source} must be a JSON object")
    unknown = set(file_data) - set(DEFAULT_CONFIG)
    unknown |= set(noise) - set(DEFAULT_CONFIG["noise"])
    if unknown:
        raise ConfigError(f"Unknown configuration keys in {source}: {sorted(unknown)}")
    json_data["noise"].update(noise)
    json_data.update(file_data)


class Config:
    """
    Configuration handler for the toolkit.

    Loads configuration from a JSON file on top of DEFAULT_CONFIG, validates
    values, and provides methods to update configuration settings. Supports
    both temporary (RAM-only) and permanent (file-persisted) updates.
    Delegates noise-related validation and updates to the NoiseConfig class.

    Attributes:
        config_file (str | None): Path to the configuration JSON file.
        noise (NoiseConfig): Noise configuration handler.
        n (int): Number of simulated trials.
        block_size (int): Trials between recalibrations.
        report_size (int | None): Trials per S-tracking window.
        seed (int): Key of the counter-based generator.
        workers (int): Simulation threads.
        repetition_rate (float): Trial rate in Hz, metadata only.
        conf (float): Confidence level of certificates.
        distance_m (float): Shortest start-to-stop distance in meters.
        duration_ns (float): Protocol duration in nanoseconds.
        distance_sigma_ns (float): Distance uncertainty as light time in nanoseconds.
        duration_sigma_ns (float): Duration uncertainty in nanoseconds.
        k_sigma (float): Standard deviations the locality margin must exceed.
        log_level (str): Name of the log level.
        colorized (bool): Colorize log levels.
        CONFIG_SCHEMA (dict): Validation schema for configuration keys.
    """

    def __init__(self, config_path: str | None = None, values: dict | None = None) -> None:
        """
        Initializes the Config object from the defaults, overlaid with a JSON
        file and then with ``values``.

        Args:
            config_path (str | None): Path to the configuration JSON file.
            values (dict | None): Configuration in the file layout, e.g. from a run manifest.

        Raises:
            FileNotFoundError: If the configuration file does not exist.
            json.JSONDecodeError: If the configuration file is not valid JSON.
            ConfigError: If the file holds unknown or invalid keys.
        """

        self.config_file = config_path
        json_data = copy.deepcopy(DEFAULT_CONFIG)
        if config_path is not None:
            with open(config_path, "r") as f:
                _overlay(json_data, json.loads(f.read()), config_path)
        if values is not None:
            _overlay(json_data, copy.deepcopy(values), "values")

        self.CONFIG_SCHEMA = {
            "n": {"type": int, "min": 1},
            "block_size": {"type": int, "min": 1},
            "report_size": {"type": int, "min": 1, "nullable": True},
            "seed": {"type": int, "min": 0, "max": (1 << 64) - 1},
            "workers": {"type": int, "min": 1, "max": 256},
            "repetition_rate": {"type": _NUMBER, "min": 0.0},
            "conf": {"type": _NUMBER, "min_exclusive": 0.0, "max_exclusive": 1.0},
            "distance_m": {"type": _NUMBER, "min_exclusive": 0.0},
            "duration_ns": {"type": _NUMBER, "min": 0.0},
            "distance_sigma_ns": {"type": _NUMBER, "min": 0.0},
            "duration_sigma_ns": {"type": _NUMBER, "min": 0.0},
            "k_sigma": {"type": _NUMBER, "min": 0.0},
            "log_level": {
                "type": str,
                "allowed_values": ["NOTSET", "DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
            },
            "colorized": {"type": bool},
        }

        try:
            self.noise: NoiseConfig = NoiseConfig(json_data["noise"])
            for key in self.CONFIG_SCHEMA:
                self.validate(key, json_data[key])
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"Invalid configuration: {e}") from e

        self.n: int = json_data["n"]
        self.block_size: int = json_data["block_size"]
        self.report_size: int | None = json_data["report_size"]
        self.seed: int = json_data["seed"]
        self.workers: int = json_data["workers"]
        self.repetition_rate: float = json_data["repetition_rate"]
        self.conf: float = json_data["conf"]
        self.distance_m: float = json_data["distance_m"]
        self.duration_ns: float = json_data["duration_ns"]
        self.distance_sigma_ns: float = json_data["distance_sigma_ns"]
        self.duration_sigma_ns: float = json_data["duration_sigma_ns"]
        self.k_sigma: float = json_data["k_sigma"]
        self.log_level: str = json_data["log_level"]
        self.colorized: bool = json_data["colorized"]

    # validates values from input
    def validate(self, key: str, value) -> None:
        """
        Validates a configuration value against its schema.

        Args:
            key (str): The configuration key to validate.
            value: The value to validate.

        Raises:
            KeyError: If the key is unknown.
            TypeError: If the value is not of the expected type.
            ValueError: If the value is out of the allowed range.
        """

        if key not in self.CONFIG_SCHEMA:
            # Delegate noise-related validation to NoiseConfig
            self.noise.validate(key, value)
            return

        schema = self.CONFIG_SCHEMA[key]
        if value is None and schema.get("nullable"):
            return

        expected_type = schema["type"]
        # checks value is of same type; bools only where a bool is expected
        if not isinstance(value, expected_type) or (
            isinstance(value, bool) and expected_type is not bool
        ):
            raise TypeError(f"{key} has the wrong type: {value!r}")

        if "allowed_values" in schema and value not in schema["allowed_values"]:
            raise ValueError(f"{key} must be one of {schema['allowed_values']}, got {value!r}")

        if isinstance(value, (int, float)) and not isinstance(value, bool):
            if "min" in schema and value < schema["min"]:
                raise ValueError(f"{key} must be at least {schema['min']}, got {value}")
            if "max" in schema and value > schema["max"]:
                raise ValueError(f"{key} must be at most {schema['max']}, got {value}")
            if "min_exclusive" in schema and value <= schema["min_exclusive"]:
                raise ValueError(f"{key} must exceed {schema['min_exclusive']}, got {value}")
            if "max_exclusive" in schema and value >= schema["max_exclusive"]:
                raise ValueError(f"{key} must be below {schema['max_exclusive']}, got {value}")

    # permanently updates values
    def _save_config(self, key: str, value) -> None:
        """
        Saves a configuration value to the JSON file.

        Args:
            key (str): The configuration key to save.
            value: The value to save.

        Raises:
            ConfigError: If the configuration was not loaded from a file.
        """

        if self.config_file is None:
            raise ConfigError("No configuration file to save to")

        with open(self.config_file, "r") as f:
            json_data = json.loads(f.read())

        if key in self.CONFIG_SCHEMA:
            json_data[key] = value
        else:
            json_data.setdefault("noise", {})[key] = value

        with open(self.config_file, "w") as f:
            f.write(json.dumps(json_data, indent=4))

    # handles temp or permanent updates
    def update_config(self, key: str, value, temporary: bool) -> None:
        """
        Updates a configuration value, either temporarily (RAM only) or permanently (persisted to file).

        Args:
            key (str): The configuration key to update.
            value: The new value to set.
            temporary (bool): If True, update only in RAM; if False, persist to file.

        Raises:
            ConfigError: If the key is unknown or the value is invalid.
        """

        # validates key and value and should raise error if any
        try:
            self.validate(key, value)
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"Invalid value for {key}: {e}") from e
        # if permanent, saves to config
        if not temporary:
            self._save_config(key, value)
        # updates RAM
        if key in self.CONFIG_SCHEMA:
            setattr(self, key, value)
        else:
            setattr(self.noise, key, value)

    def to_dict(self) -> dict:
        """The resolved configuration in the file layout."""
        values = {key: getattr(self, key) for key in self.CONFIG_SCHEMA}
        values["noise"] = self.noise.to_dict()
        return values

    def to_experiment(self) -> ExperimentConfig:
        """
        Builds the simulator configuration.

        Raises:
            ConfigError: If the sizes are inconsistent.
        """
        return ExperimentConfig(
            n_trials=self.n,
            block_size=self.block_size,
            seed=self.seed,
            noise=self.noise.to_noise_model(),
            repetition_rate=float(self.repetition_rate),
            report_size=self.report_size,
            workers=self.workers,
        )

    def to_spacetime(self) -> SpaceTimeConfig:
        """Builds the timing configuration."""
        return SpaceTimeConfig(
            separation_distance=float(self.distance_m),
            protocol_duration=float(self.duration_ns),
            distance_sigma=float(self.distance_sigma_ns),
            duration_sigma=float(self.duration_sigma_ns),
            k_sigma=float(self.k_sigma),
        )
