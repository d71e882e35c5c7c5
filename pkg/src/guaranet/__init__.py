"""Guarantee-network analytics and default-cascade simulation."""
