"""Configuration package for the focalframes application."""
