"""Test package for mcmc-certify."""
