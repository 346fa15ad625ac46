"""Tests for mmWave NC."""
