from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Type, TypeVar

from pydantic import BaseModel, ValidationError

from app.dassim.das_errors import ConfigError, SimulationError

logger = logging.getLogger(__name__)

M = TypeVar("M", bound=BaseModel)


class CommandAdapter:
    """Minimal adapter contract for CLI subcommands."""

    id: str
    description: str

    def config_keys(self) -> Iterable[str]:
        raise NotImplementedError

    def invoke(self, ctx: Dict[str, Any], args: Dict[str, Any]) -> Dict[str, Any]:
        raise NotImplementedError

    def check_keys(self, args: Dict[str, Any]):
        unknown = sorted(set(args) - set(self.config_keys()))
        if unknown:
            raise ConfigError(f"Unknown configuration keys for '{self.id}': {unknown}", {"unknown_keys": unknown})


def build_model(model: Type[M], args: Dict[str, Any], exclude: Iterable[str] = (), **overrides) -> M:
    """Validate the subset of flat keys that ``model`` declares; pydantic errors become ConfigError."""
    fields = set(model.model_fields) - set(exclude)
    values = {k: v for k, v in args.items() if k in fields}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return model(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid {model.__name__}: {e.errors()[0]['msg']}",
                          {"errors": [{"loc": list(err["loc"]), "msg": err["msg"]} for err in e.errors()]})


def out_path(ctx: Dict[str, Any], name: str) -> Path:
    return Path(ctx["out_dir"]) / name


class CommandRegistry:
    def __init__(self):
        self._commands: Dict[str, CommandAdapter] = {}

    def register(self, command: CommandAdapter):
        self._commands[command.id] = command

    def names(self) -> List[str]:
        return list(self._commands)

    def get(self, name: str) -> CommandAdapter:
        return self._commands[name]

    def describe(self, name: str) -> str:
        return getattr(self._commands[name], "description", "")

    def invoke(self, name: str, ctx: Dict[str, Any], args: Dict[str, Any]) -> Dict[str, Any]:
        if name not in self._commands:
            return {"success": False, "error": {"code": "CONFIG_ERROR", "message": "Unknown subcommand",
                                                "details": {"name": name}}}
        command = self._commands[name]
        try:
            command.check_keys(args)
            return command.invoke(ctx, args)
        except SimulationError as e:
            logger.error("%s failed: %s", name, e.message)
            return {"success": False, "error": e.to_dict()}
        except (ValueError, TypeError) as e:
            # InvalidArgumentError and malformed numeric overrides
            logger.error("%s failed: %s", name, e)
            return {"success": False, "error": {"code": "CONFIG_ERROR", "message": str(e), "details": {}}}


# Singleton registry used by the CLI
registry = CommandRegistry()
