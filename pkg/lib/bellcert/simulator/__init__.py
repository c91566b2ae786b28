"""
Seeded Bell-test trial simulation: noise model, counter-based randomness, trial blocks and logs.
"""
