"""Weighted variable-exponent Lebesgue spaces on a grid."""
