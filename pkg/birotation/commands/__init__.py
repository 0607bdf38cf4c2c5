"""Command-line subcommands; each module exposes register() and run()."""
from birotation.commands import chain, evaluate, solve, sweep, synth

COMMANDS = (solve, synth, evaluate, sweep, chain)

__all__ = ["COMMANDS", "chain", "evaluate", "solve", "sweep", "synth"]
