"""Test suite for chiral-winding."""
