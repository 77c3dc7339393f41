"""
HigherHolonomy - Utility functions and helpers
"""
import os
import json
import datetime
from fractions import Fraction
from typing import Dict, Any, List, Optional


DEFAULTS: Dict[str, Any] = {
    "scalar_backend": "exact",
    "eps_num": 1e-10,
    "eps_rank": None,
    "degree_cap": 16,
    "bundle_degree_cap": 4,
    "quadrature": {
        "nodes": 8,
        "max_word_length": 12,
        "term_floor": 1e-12,
        "tolerance": 1e-8,
        "refinements": [4, 8, 16],
    },
    "report": {
        "converged_floor": 1e-12,
    },
    "random_seed": 20240601,
    "log_file": "logs/higher_holonomy.log",
    "gallery_dir": "gallery",
    "horn_fill_top": "zero",
}


class Config:
    """Configuration manager for HigherHolonomy"""

    def __init__(self, config_path: str = "config.json"):
        self.config_path = config_path
        self.config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from JSON file"""
        try:
            with open(self.config_path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except FileNotFoundError:
            print(f"Warning: Config file not found at {self.config_path}")
            return {}
        except json.JSONDecodeError as e:
            print(f"Error parsing config file: {e}")
            return {}

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value; dotted keys reach into sections

        Falls back to the built-in default when neither the file nor the
        caller supplies a value.
        """
        for source in (self.config, DEFAULTS):
            node: Any = source
            for part in key.split('.'):
                if not isinstance(node, dict) or part not in node:
                    node = None
                    break
                node = node[part]
            if node is not None:
                return node
        return default

    def set(self, key: str, value: Any):
        """Set configuration value and save"""
        parts = key.split('.')
        node = self.config
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
        self._save_config()

    def _save_config(self):
        """Save configuration to file"""
        directory = os.path.dirname(self.config_path)
        if directory:
            ensure_dir(directory)
        with open(self.config_path, 'w', encoding='utf-8') as f:
            json.dump(self.config, f, indent=2)


class Logger:
    """Simple logging utility"""

    def __init__(self, log_file: Optional[str] = None, verbose: bool = True):
        self.log_file = log_file
        self.verbose = verbose
        if log_file and os.path.dirname(log_file):
            os.makedirs(os.path.dirname(log_file), exist_ok=True)

    def info(self, message: str):
        """Log info message"""
        self._log("INFO", message)

    def warning(self, message: str):
        """Log warning message"""
        self._log("WARNING", message)

    def error(self, message: str):
        """Log error message"""
        self._log("ERROR", message)

    def success(self, message: str):
        """Log success message"""
        self._log("SUCCESS", message)

    def _log(self, level: str, message: str):
        """Internal logging method"""
        timestamp = datetime.datetime.now().strftime("%Y-%m-%d %H:%M:%S")
        log_message = f"[{timestamp}] [{level}] {message}"

        if self.verbose:
            print(log_message)

        if self.log_file:
            with open(self.log_file, 'a', encoding='utf-8') as f:
                f.write(log_message + '\n')


class LogMixin:
    """`_log_*` helpers for engine classes holding an optional `self.logger`"""

    logger: Optional[Logger] = None

    def _log_info(self, message: str):
        if self.logger:
            self.logger.info(message)

    def _log_success(self, message: str):
        if self.logger:
            self.logger.success(message)

    def _log_warning(self, message: str):
        if self.logger:
            self.logger.warning(message)

    def _log_error(self, message: str):
        if self.logger:
            self.logger.error(message)


class Issue:
    """Represents a failed (or noteworthy) mathematical check"""

    ERROR = 'error'
    WARNING = 'warning'
    INFO = 'info'

    def __init__(self, location: Any, severity: str, message: str, norm: Optional[float] = None):
        self.location = location
        self.severity = severity
        self.message = message
        self.norm = norm

    def __repr__(self):
        return f"{format_location(self.location)} [{self.severity.upper()}]: {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        out = {
            'location': format_location(self.location),
            'severity': self.severity,
            'message': self.message,
        }
        if self.norm is not None:
            out['norm'] = self.norm
        return out


def format_location(location: Any) -> str:
    if isinstance(location, tuple):
        return "(" + ",".join(str(v) for v in location) + ")"
    return str(location)


def has_errors(issues: List[Issue]) -> bool:
    return any(issue.severity == Issue.ERROR for issue in issues)


def parse_rational(value: Any) -> Fraction:
    """Parse "3/2", 3, or an exactly representable float into a Fraction

    Raises:
        ValueError: for anything else
    """
    if isinstance(value, bool):
        raise ValueError(f"Not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10 ** 12)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Not a rational: {value!r}") from e
    raise ValueError(f"Not a rational: {value!r}")


def format_rational(value: Any) -> Any:
    """JSON form of a scalar: rational string for exact values, float otherwise"""
    if isinstance(value, (Fraction, int)) and not isinstance(value, bool):
        return str(Fraction(value))
    return float(value)


def load_json(path: str) -> Dict[str, Any]:
    """Load a JSON document

    Raises:
        ValueError: with line/column location when the file is malformed
    """
    with open(path, 'r', encoding='utf-8') as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e


def save_json(path: str, data: Any):
    directory = os.path.dirname(path)
    if directory:
        ensure_dir(directory)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2)


def ensure_dir(directory: str):
    """Ensure directory exists"""
    os.makedirs(directory, exist_ok=True)


def simplex_key(vertices) -> str:
    """JSON key of a simplex: "[0,1,2]" """
    return "[" + ",".join(str(v) for v in vertices) + "]"


def parse_simplex_key(key: str) -> tuple:
    """Simplex key in either "[0,1]" or the bare "0,1" form"""
    text = str(key).strip()
    try:
        if text.startswith('['):
            return tuple(int(v) for v in json.loads(text))
        return tuple(int(v) for v in text.split(',') if v.strip() != '')
    except (ValueError, TypeError) as e:
        raise ValueError(f"Bad simplex key {key!r}") from e
