"""Reverse-mode tape over θ wrapped around forward-mode jets in x."""
