"""DC optimal power flow dispatch simulation with LMPs and scenario synthesis."""

__version__ = "0.1.0"
