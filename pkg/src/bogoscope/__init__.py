"""Bogoliubov-theory toolkit."""
