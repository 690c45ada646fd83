"""Energy-grade double pricing for coupled CHP heat and electricity markets."""

__version__ = "0.1.0"
