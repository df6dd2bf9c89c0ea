"""
irrsum Configuration Management
"""

from typing import Dict, Any, Optional
from dataclasses import dataclass, field
from pathlib import Path
import json
import os

from core.errors import ConfigurationError


@dataclass
class PrecisionConfig:
    """Working precision of the mpmath context"""
    bits: int = 256
    max_bits: int = 8192        # adaptive retries stop here
    env_var: str = "IRRSUM_PRECISION"


@dataclass
class DippConfig:
    """Diagonal integration by parts defaults"""
    k: float = 1.0
    n_max: int = 60
    tol: float = 1e-12
    order_tol_bits: int = 96    # order checks use a relative tolerance of 2**-order_tol_bits
    root_scan_min: int = 8      # minimum sign-scan subdivisions per polynomial piece


@dataclass
class SummationConfig:
    """Summation-by-packages defaults"""
    a: float = 0.0
    k: float = 1.0
    n_max: int = 40
    eps_cap_exponent: float = 3.0   # eps_degen <= 2**(-bits/eps_cap_exponent)
    verify_bounds: bool = False
    density_window: Optional[float] = None


@dataclass
class OutputConfig:
    """Serialization of numbers and tables"""
    extra_digits: int = 5
    csv_delimiter: str = ","


@dataclass
class ServerConfig:
    """HTTP server settings"""
    host: str = "0.0.0.0"
    port: int = 5000
    verbose: bool = False


@dataclass
class IrrsumSettings:
    """Complete irrsum configuration"""
    precision: PrecisionConfig = field(default_factory=PrecisionConfig)
    dipp: DippConfig = field(default_factory=DippConfig)
    summation: SummationConfig = field(default_factory=SummationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    server: ServerConfig = field(default_factory=ServerConfig)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'IrrsumSettings':
        """Create settings from dictionary"""
        try:
            return cls(
                precision=PrecisionConfig(**data.get('precision', {})),
                dipp=DippConfig(**data.get('dipp', {})),
                summation=SummationConfig(**data.get('summation', {})),
                output=OutputConfig(**data.get('output', {})),
                server=ServerConfig(**data.get('server', {}))
            )
        except TypeError as e:
            raise ConfigurationError(f"Unknown configuration key: {e}") from e

    @classmethod
    def load(cls, config_path: Optional[str] = None) -> 'IrrsumSettings':
        """Load settings from file, then apply the precision environment override"""
        if config_path is None:
            # Look for config in common locations
            possible_paths = [
                Path.cwd() / "irrsum_config.json",
                Path.home() / ".irrsum" / "config.json",
                Path(__file__).parent / "default_config.json"
            ]

            for path in possible_paths:
                if path.exists():
                    config_path = str(path)
                    break

        if config_path and Path(config_path).exists():
            try:
                with open(config_path, 'r') as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigurationError(f"Malformed configuration file {config_path}: {e}") from e
            settings = cls.from_dict(data)
        else:
            settings = cls()

        settings._apply_env_override()
        return settings

    def _apply_env_override(self):
        raw = os.getenv(self.precision.env_var)
        if raw is None or raw.strip() == "":
            return
        try:
            bits = int(raw)
        except ValueError:
            raise ConfigurationError(f"{self.precision.env_var} must be an integer, got {raw!r}")
        if bits < 53:
            raise ConfigurationError(f"{self.precision.env_var} must be at least 53 bits, got {bits}")
        self.precision.bits = bits
        self.precision.max_bits = max(self.precision.max_bits, bits)


# Global settings instance
_settings: Optional[IrrsumSettings] = None


def get_settings() -> IrrsumSettings:
    """Get global settings instance"""
    global _settings
    if _settings is None:
        _settings = IrrsumSettings.load()
    return _settings


def get_precision_bits() -> int:
    """Default working precision in bits"""
    return get_settings().precision.bits


def get_dipp_settings() -> Dict[str, Any]:
    """Get DIPP settings as dictionary"""
    return get_settings().dipp.__dict__


def get_summation_settings() -> Dict[str, Any]:
    """Get summation settings as dictionary"""
    return get_settings().summation.__dict__


def reload_settings(config_path: Optional[str] = None):
    """Reload settings from file"""
    global _settings
    _settings = IrrsumSettings.load(config_path)
