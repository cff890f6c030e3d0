"""Run manifests: enough resolved state to reproduce any command's outputs.

A manifest carries the command name, every resolved parameter, digests of
all inputs and outputs, and any RNG seeds. It contains no timestamps, so a
re-run of a deterministic command reproduces the manifest byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    version: str
    parameters: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)   # path -> sha256
    outputs: dict = field(default_factory=dict)  # filename -> sha256
    seeds: dict = field(default_factory=dict)

    def add_input(self, path: str) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, name: str, path: str) -> None:
        self.outputs[name] = sha256_file(path)

    def write(self, path: str) -> None:
        payload = {
            "command": self.command,
            "version": self.version,
            "parameters": self.parameters,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seeds": self.seeds,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
