"""Configuration-driven experiment runner"""

from .commands import COMMANDS, cmd_mp2d, cmd_radial, cmd_stability, cmd_sweep, cmd_tmprobe, run_command  # noqa
from .schemas import RunConfig, load_config, parse_config  # noqa
