#!/usr/bin/env python3
"""
ospde - command line runner.
Usage: python run.py <solve|sweep|verify|lemmas|oracle> --config CONFIG [--out DIR]
"""

from ospde import create_cli

# Create the command line instance
cli = create_cli()

if __name__ == '__main__':
    cli()
