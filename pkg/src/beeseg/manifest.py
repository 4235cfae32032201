"""Run manifests: resolved configuration plus input digests for exact replay.

Every CLI command writes ``manifest.json`` next to its outputs. The manifest
holds the fully resolved options (defaults materialized, config files already
folded in) and a SHA-256 digest of every input file the command read, so the
run can be replayed bit-exactly as long as those inputs are unchanged. The
output directory is deliberately not part of the manifest; a replay writes
into a directory of the caller's choosing and produces identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

TOOL_NAME = "beeseg"
MANIFEST_FILENAME = "manifest.json"


class ManifestError(ValueError):
    """Unusable manifest: malformed content or drifted inputs."""


@dataclass
class RunManifest:
    command: str
    args: dict
    seed: int
    inputs: dict  # absolute path -> sha256 hex digest
    version: str

    def to_dict(self) -> dict:
        return {
            "tool": TOOL_NAME,
            "version": self.version,
            "command": self.command,
            "seed": self.seed,
            "args": self.args,
            "inputs": self.inputs,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        try:
            if data["tool"] != TOOL_NAME:
                raise ManifestError(f"manifest written by {data['tool']!r}, not {TOOL_NAME}")
            return cls(
                command=data["command"],
                args=dict(data["args"]),
                seed=int(data["seed"]),
                inputs=dict(data["inputs"]),
                version=data["version"],
            )
        except (KeyError, TypeError) as exc:
            raise ManifestError(f"malformed manifest: {exc}") from None


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def digest_inputs(paths) -> dict:
    """Absolute-path -> digest map for every non-None path."""
    return {str(Path(p).resolve()): sha256_file(p) for p in paths if p is not None}


def write_manifest(manifest: RunManifest, out_dir) -> Path:
    path = Path(out_dir) / MANIFEST_FILENAME
    path.write_text(manifest.dumps())
    return path


def load_manifest(path) -> RunManifest:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    return RunManifest.from_dict(data)


def verify_inputs(manifest: RunManifest) -> None:
    """Raise unless every recorded input still exists with the same digest."""
    for path, digest in manifest.inputs.items():
        if not Path(path).is_file():
            raise ManifestError(f"manifest input missing: {path}")
        actual = sha256_file(path)
        if actual != digest:
            raise ManifestError(
                f"manifest input changed since the original run: {path} "
                f"(expected {digest}, found {actual})"
            )
