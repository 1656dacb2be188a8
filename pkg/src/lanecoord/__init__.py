"""Decentralized lane switching and adaptive cruise control via a CLF-CBF QP."""
