from wetsim.cli.main import execute, main, run
from wetsim.cli.models import COMMAND_KEYS, Command, RunConfig

__all__ = ["COMMAND_KEYS", "Command", "RunConfig", "execute", "main", "run"]
