"""Toolkit for evading feature-based phishing-page detectors: parse and
rewrite HTML with rendering-preserving manipulations, extract the detector
feature set, train and calibrate reference models, and drive a
query-efficient black-box attack loop with its evaluation harness."""

__version__ = "0.1.0"
