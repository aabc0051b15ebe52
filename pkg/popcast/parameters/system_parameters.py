"""The parameters of the shared wireless link and of the simulation runs."""
import copy
import math
import numbers
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Dict, Union, List

from ..errors import ConfigError

__all__ = ["Parameter", "FloatParameter", "IntParameter", "SystemConfig", "ParametersList", "presets"]


@dataclass
class Parameter:
    """Class to store one separate parameter"""
    name: str = ""

    def convert(self, value):
        return value


@dataclass
class FloatParameter(Parameter):
    """Class to store one separate float parameter"""
    param: Optional[float] = None

    def convert(self, value) -> Optional[float]:
        if value is None:
            return None
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"'{value}' is not a number for {self.name}") from None
        if not math.isfinite(value):
            raise ConfigError(f"{self.name} must be finite, {value} given")
        return value


@dataclass
class IntParameter(Parameter):
    """Class to store one separate integer parameter"""
    param: Optional[int] = None

    def convert(self, value) -> Optional[int]:
        if value is None:
            return None
        try:
            return int(value.strip()) if isinstance(value, str) else int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"'{value}' is not an integer for {self.name}") from None


@dataclass(frozen=True)
class SystemConfig:
    """The capacity of the link and the bandwidth limits of a single broadcast session.

    Parameters:
        capacity_kbps (float): The total capacity $C$ of the link, in kbps.
        beta_max_kbps (float): The bandwidth $\\beta_{max}$ for the best quality of a session, in kbps.
        beta_min_kbps (float): The bandwidth $\\beta_{min}$ guaranteeing the minimum quality, in kbps.
        layer_granularity_kbps (float): The bandwidth of one enhancement layer, in kbps.
    """
    capacity_kbps: float = 30000.
    beta_max_kbps: float = 2000.
    beta_min_kbps: float = 600.
    layer_granularity_kbps: float = 100.

    def __post_init__(self):
        for key in ("capacity_kbps", "beta_max_kbps", "beta_min_kbps", "layer_granularity_kbps"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, numbers.Real) or not math.isfinite(value):
                raise ConfigError(f"{key} must be a finite number, {value!r} given")
        if self.capacity_kbps < 0:
            raise ConfigError(f"capacity_kbps can't be negative, {self.capacity_kbps:g} given")
        if self.beta_min_kbps <= 0:
            raise ConfigError(f"beta_min_kbps must be positive, {self.beta_min_kbps:g} given")
        if self.layer_granularity_kbps <= 0:
            raise ConfigError(f"layer_granularity_kbps must be positive, {self.layer_granularity_kbps:g} given")
        if self.beta_min_kbps > self.beta_max_kbps:
            raise ConfigError(
                f"beta_min_kbps ({self.beta_min_kbps:g}) larger than beta_max_kbps ({self.beta_max_kbps:g})"
            )
        if self.beta_max_kbps > self.capacity_kbps:
            raise ConfigError(
                f"beta_max_kbps ({self.beta_max_kbps:g}) larger than capacity_kbps ({self.capacity_kbps:g}), "
                "not even a single session fits at full quality"
            )

    @property
    def beta_diff_kbps(self) -> float:
        """The range $\\beta_{max} - \\beta_{min}$ that is shared by popularity."""
        return self.beta_max_kbps - self.beta_min_kbps

    def to_dict(self) -> dict:
        """Return the configuration as a dictionary in the format `"name": value`."""
        return {
            "capacity_kbps": self.capacity_kbps,
            "beta_max_kbps": self.beta_max_kbps,
            "beta_min_kbps": self.beta_min_kbps,
            "layer_granularity_kbps": self.layer_granularity_kbps
        }


class ParametersList:
    """Class to save the parameters of a run"""

    def __init__(self, input_dict: Optional[Dict[str, Union[float, int]]] = None):
        """Initialize the parameters for a run.

        Parameters:
            input_dict (Optional[Dict[str, Union[float, int]]]): The parameters for the run.
                The keys are the names of the parameters and the values are the values of the parameters.
                The keys are:
                `capacity_kbps`, `beta_max_kbps`, `beta_min_kbps`, `layer_granularity_kbps`, `seed` and `trials`
        """
        self._system_params_dict: dict = {
            "capacity_kbps": FloatParameter(name=r"$C$"),
            "beta_max_kbps": FloatParameter(name=r"$\beta_{max}$"),
            "beta_min_kbps": FloatParameter(name=r"$\beta_{min}$"),
            "layer_granularity_kbps": FloatParameter(name=r"$g$")
        }
        self._run_params_dict: dict = {
            "seed": IntParameter(name="seed"),
            "trials": IntParameter(name="trials")
        }
        if input_dict is not None:
            self.from_dict(input_dict)

    @property
    def _all_params_dict(self) -> List[dict]:
        return [self._system_params_dict, self._run_params_dict]

    @property
    def _allowed_params(self) -> List[str]:
        return [param_key for param_dict in self._all_params_dict for param_key in param_dict.keys()]

    def _check_key(self, key) -> bool:
        if key not in self._allowed_params:
            warnings.warn(f"Variable {key} is not an expected variable, it is ignored", UserWarning, stacklevel=3)
            return False
        return True

    def _find(self, key) -> Parameter:
        for param_dict in self._all_params_dict:
            if key in param_dict.keys():
                return param_dict[key]
        raise KeyError(key)

    def __setitem__(self, key, value):
        if self._check_key(key):
            parameter = self._find(key)
            parameter.param = parameter.convert(value)

    def __getitem__(self, item) -> Union[float, int]:
        value = self.get_param(item)
        return 0.0 if value is None else value

    def get_dict(self) -> dict:
        """Function to get the variables as a dict."""
        out_dict = {}
        for param_dict in self._all_params_dict:
            for key, item in param_dict.items():
                if item.param is not None:
                    out_dict[key] = item.param
        return out_dict

    def get_param(self, key):
        """Function to get the specific variable, `None` if it isn't set."""
        if self._check_key(key):
            return self._find(key).param

    def get_name(self, key) -> str:
        """Function to get the name (in LaTeX) of the specific variable"""
        if self._check_key(key):
            return self._find(key).name

    def from_dict(self, input_dict: Dict[str, Union[float, int, str]]):
        """Function to set the variables with a dict.

        Parameters:
            input_dict (dict): The dictionary containing the parameters.
                The allowed keys are:
                `capacity_kbps`, `beta_max_kbps`, `beta_min_kbps`, `layer_granularity_kbps`, `seed` and `trials`
        """
        for param_name, value in input_dict.items():
            self[param_name] = value

    def from_file(self, path: Union[str, Path]):
        """Function to set the variables from a flat `key = value` text file.
        Empty lines and lines starting with `#` are skipped.

        Parameters:
            path (Union[str, Path]): The path to the configuration file.
        """
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as error:
            raise ConfigError(f"can't read config file '{path}': {error.strerror}") from None
        except UnicodeDecodeError as error:
            raise ConfigError(f"config file '{path}' isn't valid UTF-8: {error.reason} at byte {error.start}") \
                from None
        values = {}
        for line_number, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{line_number}: expected 'key = value', got '{line}'")
            values[key.strip()] = value.strip()
        self.from_dict(values)

    def copy(self) -> "ParametersList":
        """Return an independent copy of the parameters."""
        return copy.deepcopy(self)

    def system_config(self) -> SystemConfig:
        """Build the immutable `SystemConfig` from the link parameters."""
        missing = [key for key, item in self._system_params_dict.items() if item.param is None]
        if missing:
            raise ConfigError(f"missing parameters: {', '.join(missing)}")
        return SystemConfig(**{key: item.param for key, item in self._system_params_dict.items()})


_default = ParametersList(dict(zip(
    # 30 Mbps link, 2 Mbps full quality, 0.6 Mbps minimum quality
    [
        "capacity_kbps",    "beta_max_kbps",    "beta_min_kbps",    "layer_granularity_kbps",
        "seed",             "trials"
    ],
    [
        30000.,             2000.,              600.,               100.,
        42,                 100
    ]
)))

_small_3 = ParametersList(dict(zip(
    # three sessions watched by 7, 2 and 1 users, one cap
    [
        "capacity_kbps",    "beta_max_kbps",    "beta_min_kbps",    "layer_granularity_kbps",
        "seed",             "trials"
    ],
    [
        10000.,             4000.,              1000.,              100.,
        42,                 100
    ]
)))

_small_4 = ParametersList(dict(zip(
    # four sessions watched by 4, 2, 1 and 1 users, two caps
    [
        "capacity_kbps",    "beta_max_kbps",    "beta_min_kbps",    "layer_granularity_kbps",
        "seed",             "trials"
    ],
    [
        11000.,             3000.,              1000.,              100.,
        42,                 100
    ]
)))

presets = {
    "default": _default,
    "small-3": _small_3,
    "small-4": _small_4
}
