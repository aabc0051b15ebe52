"""Subpackage for saving the parameters of the link and of the runs."""
from .system_parameters import *
