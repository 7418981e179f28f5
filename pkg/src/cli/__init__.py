from .commands import HANDLERS, VERBS, CommandOptions, CommandResult, RunLayout, run_command
from .manifest import RunManifest, load_manifest, manifest_path

__all__ = [
    "CommandOptions",
    "CommandResult",
    "HANDLERS",
    "RunLayout",
    "RunManifest",
    "VERBS",
    "load_manifest",
    "manifest_path",
    "run_command",
]
