"""`python -m kyaml`."""

from .cli import main

main()
