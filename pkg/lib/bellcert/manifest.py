"""Run manifests written next to every command output.

A manifest records the command line, the fully resolved configuration and
the files read and written, so ``main.py replay <manifest>`` regenerates the
outputs.
"""

import json
from dataclasses import asdict, dataclass, field

from . import __version__
from .error import ConfigError

MANIFEST_SUFFIX = ".manifest.json"


@dataclass
class RunManifest:
    """Provenance of one command run.

    Attributes:
        command: Subcommand name.
        argv: Arguments the command was invoked with, without the program name.
        config: Resolved configuration in the config file layout.
        inputs: Paths read.
        outputs: Paths written.
        seed: Generator key used, if any.
        version: Toolkit version.
    """

    command: str
    argv: list[str]
    config: dict
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    seed: int | None = None
    version: str = __version__

    def write(self, output_path: str) -> str:
        """Writes the manifest as ``<output_path>.manifest.json`` and returns its path."""
        path = output_path + MANIFEST_SUFFIX
        with open(path, "w") as f:
            f.write(json.dumps(asdict(self), indent=4, sort_keys=True))
            f.write("\n")
        return path

    @classmethod
    def load(cls, path: str) -> "RunManifest":
        """
        Raises:
            ConfigError: If the file is not a manifest.
        """
        with open(path, "r") as f:
            data = json.loads(f.read())
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"{path} is not a run manifest") from e
