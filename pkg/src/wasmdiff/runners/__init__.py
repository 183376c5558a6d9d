"""Small command-line shims that execute one export of a binary on one engine."""
