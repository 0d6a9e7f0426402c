import concurrent.futures
import dataclasses
import enum
import json
import os
import platform

import numpy as np
import psutil
import yaml

from ptbloch.config import CONFIGS_ROOT_DIR
from ptbloch.errors import ConfigError


class PTBJsonEncoder(json.JSONEncoder):
    """
    Complex numbers are written as {"re": .., "im": ..} so outputs stay valid JSON; numpy scalars and arrays
    become plain Python values.
    """

    def default(self, obj):
        try:
            if isinstance(obj, (complex, np.complexfloating)):
                return {"re": float(obj.real), "im": float(obj.imag)}
            if isinstance(obj, np.ndarray):
                return obj.tolist()
            if isinstance(obj, np.integer):
                return int(obj)
            if isinstance(obj, np.floating):
                return float(obj)
            if isinstance(obj, np.bool_):
                return bool(obj)
            if isinstance(obj, (set, frozenset)):
                return sorted(obj)
            elif "Logger" in str(type(obj)):
                return "Logger object"
            elif isinstance(obj, enum.Enum):
                return obj.value
            elif hasattr(obj, 'to_dict'):
                return obj.to_dict()
            elif dataclasses.is_dataclass(obj):
                return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
            elif hasattr(obj, '__dict__'):
                return obj.__dict__
            else:
                return super().default(obj)
        except Exception:
            return str(obj)


def complex_from_json(value) -> complex:
    """Inverse of the encoder for one number; also accepts [re, im] pairs and plain reals."""
    if isinstance(value, dict):
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"expected [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    if isinstance(value, bool) or value is None:
        raise ValueError(f"not a number: {value!r}")
    return complex(value)


def read_config_from_file(path):
    """
    Load a YAML (or JSON) experiment file. Relative paths that do not exist are looked up among the shipped
    configs under configs/experiments.
    """
    config_path = path
    if not os.path.isfile(config_path):
        shipped = os.path.join(CONFIGS_ROOT_DIR, "experiments", path)
        if not shipped.endswith((".yaml", ".yml", ".json")):
            shipped += ".yaml"
        if not os.path.isfile(shipped):
            raise ConfigError(f"configuration file not found: {path}", key="config")
        config_path = shipped

    with open(config_path, "r") as f:
        try:
            # PyYAML reads JSON exponents such as 1e-10 as strings
            config = json.load(f) if config_path.endswith(".json") else yaml.safe_load(f)
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot parse {config_path}: {e}", key="config")

    if config is None:
        config = {}
    if not isinstance(config, dict):
        raise ConfigError(f"{config_path} must contain a mapping at top level", key="config")
    return config


def update_nested_dict(original_dict, update_dict):
    updated_dict = {}
    for key, value in original_dict.items():
        if key in update_dict:
            if isinstance(value, dict) and isinstance(update_dict[key], dict):
                updated_dict[key] = update_nested_dict(value, update_dict[key])
            else:
                updated_dict[key] = update_dict[key]
        else:
            updated_dict[key] = value
    for key, value in update_dict.items():
        if key not in original_dict:
            updated_dict[key] = value
    return updated_dict


def flatten_nested_dict(nested_dict, parent_key='', separator='.'):
    """
    Flatten a nested dictionary structure into a single-level dictionary with keys
    joined by a separator.

    Example:
        Input: {'a': 1, 'b': {'c': 2, 'd': {'e': 3}}}
        Output: {'a': 1, 'b.c': 2, 'b.d.e': 3}
    """
    flat_dict = {}

    for key, value in nested_dict.items():
        new_key = f"{parent_key}{separator}{key}" if parent_key else key

        if isinstance(value, dict):
            flat_dict.update(flatten_nested_dict(value, new_key, separator))
        else:
            flat_dict[new_key] = value

    return flat_dict


def parallel_map(func, items, jobs=1, logger=None):
    """
    Ordered map over items. With jobs > 1 the calls run in a process pool, so func and the items must be
    picklable (module level functions, frozen dataclasses).
    """
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    workers = min(jobs, len(items))
    if logger:
        logger.debug(f"Mapping {getattr(func, '__name__', func)} over {len(items)} items with {workers} workers")
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, items))


def host_info():
    memory = psutil.virtual_memory()
    return dict(
        hostname=platform.node(),
        python=platform.python_version(),
        numpy=np.__version__,
        cpu_count_physical=psutil.cpu_count(logical=False),
        cpu_count_logical=psutil.cpu_count(logical=True),
        memory_total=memory.total,
        memory_available=memory.available,
    )
