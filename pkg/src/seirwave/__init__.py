"""Modified SEIR model with multi-wave rectangle R0, vaccination and reinfection."""
__version__ = "0.1.0"
