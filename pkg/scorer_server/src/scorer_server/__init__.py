"""Reference HTTP scorer implementing the pairwise coreference wire protocol."""

__version__ = "0.1.0"
