"""Limit-order-book replay and price-gap liquidity statistics.

Rebuilds the book from order-flow event streams through a price-time
priority continuous double auction, extracts the log gap between the two
best occupied levels on each side, and measures its tail exponent,
long-range correlation and multifractal spectrum, with shuffle-surrogate
controls and robust cross-sectional regression.
"""

__version__ = "0.1.0"
