"""Software twin of a Modbus-monitored industrial air dehumidifier bench."""

__version__ = "0.1.0"
