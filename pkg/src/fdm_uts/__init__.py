"""Binary UTS classification of FDM-printed PLA specimens from process parameters."""

__version__ = "0.1.0"
