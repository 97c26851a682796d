"""Elliptic stable envelopes of T*Gr(k,n) and its mirror dual, with mirror-identity checks."""

__version__ = "0.1.0"
