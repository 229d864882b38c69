"""Connected consensus on spider graphs: protocols, simulator and checkers."""

__version__ = "0.1.0"
