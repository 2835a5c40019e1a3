from app.commands.campaign_command import CampaignCommand
from app.commands.estimate_command import EstimateCommand
from app.commands.fading_map_command import FadingMapCommand
from app.commands.fiber_command import FiberCommand
from app.commands.poincare_command import PoincareCommand
from app.commands.probe_command import ProbeCommand
from app.commands.registry import CommandRegistry, registry

for _command in (FiberCommand(), ProbeCommand(), EstimateCommand(), CampaignCommand(),
                 FadingMapCommand(), PoincareCommand()):
    registry.register(_command)

__all__ = ["CommandRegistry", "registry"]
