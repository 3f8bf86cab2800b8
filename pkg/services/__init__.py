"""Computational services of focalframes."""
