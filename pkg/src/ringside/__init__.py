"""Offline bout segmentation and re-identification for top-view boxing video."""

__version__ = "0.1.0"
