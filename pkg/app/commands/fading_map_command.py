from __future__ import annotations

from typing import Any, Dict, Iterable

import numpy as np

from app.commands.registry import CommandAdapter, out_path
from app.dassim.das_errors import ConfigError
from app.dassim.das_estimation import MAP_PARAMS, MAP_RANGES, fading_map, map_minima
from app.dassim.das_io import write_csv, write_fading_map, write_manifest
from app.dassim.das_models import Scheme

DEFAULTS = {
    "map_x": "Theta",
    "map_y": "beta",
    "map_points": 181,
    "beta": 0.0,
    "gamma": float(np.pi / 2),
    "Theta": 0.0,
    "theta": 0.0,
    "alphas": [0.0],
    "estimators": ["SIMO"],
}


class FadingMapCommand(CommandAdapter):
    id = "fading-map"
    description = "Export phase-fading coefficient grids over two segment parameters"

    def config_keys(self) -> Iterable[str]:
        return DEFAULTS

    def invoke(self, ctx: Dict[str, Any], args: Dict[str, Any]) -> Dict[str, Any]:
        resolved = {**DEFAULTS, **args}
        points = int(resolved["map_points"])
        if points < 2:
            raise ConfigError("map_points must be at least 2")
        axes = {}
        for key in ("map_x", "map_y"):
            name = resolved[key]
            if name not in MAP_PARAMS:
                raise ConfigError(f"{key} must be one of {MAP_PARAMS}, got '{name}'")
            axes[key] = np.linspace(*MAP_RANGES[name], points)
        fixed = {name: float(resolved[name]) for name in MAP_PARAMS}

        files = []
        for estimator in resolved["estimators"]:
            try:
                scheme = Scheme(estimator)
            except ValueError:
                raise ConfigError(f"Unknown estimator '{estimator}'")
            for alpha in resolved["alphas"]:
                fmap = fading_map(resolved["map_x"], axes["map_x"], resolved["map_y"], axes["map_y"],
                                  fixed=fixed, alpha=float(alpha), estimator=scheme)
                stem = f"{scheme.value}_alpha{float(alpha):g}"
                files.append(out_path(ctx, f"fading_map_{stem}.csv"))
                write_fading_map(fmap, files[-1])
                files.append(out_path(ctx, f"fading_minima_{stem}.csv"))
                write_csv(map_minima(fmap, k=10), files[-1])

        files.append(write_manifest(ctx["out_dir"], self.id, None, resolved))
        return {"success": True, "files": [str(f) for f in files]}
