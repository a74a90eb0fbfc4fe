"""Allow `python -m slantnewton`."""

from slantnewton.cli import main

if __name__ == "__main__":
    main()
