"""Shared probe builders for the test suite (package-level generators)."""

from detanom.probes import random_radial_profile, random_smooth_field  # noqa: F401
