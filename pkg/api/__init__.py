"""HTTP layer of focalframes: request and report models, routes."""
