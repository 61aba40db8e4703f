"""Tests for the targets, weights, split sampler, baselines, harness and CLI."""
