"""Binomial coefficients of words and the complexity of generalized Thue-Morse words."""
