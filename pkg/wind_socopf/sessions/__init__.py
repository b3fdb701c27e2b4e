from .base_session import BaseSession
from .relaxation_session import RelaxationSession
from .powerflow_session import PowerFlowSession
from .wind_session import WindFarmRequest, WindSession, parse_wind_spec

__all__ = [
    'BaseSession',
    'RelaxationSession',
    'PowerFlowSession',
    'WindFarmRequest',
    'WindSession',
    'parse_wind_spec',
]
